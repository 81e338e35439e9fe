"""Command-line entry point: example generators, verification suites and serialization."""
import argparse
import copy
import csv
import json
import math
import os
import sys
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from .dyadic import build_partition, dyadic_blocks, overlap_bound, write_partition_csv
from .flnorm import FLParams, equivalence_constant, fl_dyadic_norm, fl_norm, norm_record
from .lattice import (
    FrequencyLattice,
    dumps,
    physical,
    random_band_limited,
    spectral,
    write_grid_function,
)
from .mweight import AnisotropyVector, as_anisotropy, m_weight
from .symbol import (
    Elementary,
    GridTensor,
    Multiplier,
    Separable,
    XMultiplier,
    char_set,
    is_m_elliptic,
    weight_symbol,
)


# the linear example

def _check_example_params(k1, k2, a1, a2):
    if int(k1) != k1 or int(k2) != k2 or k1 < 1 or k2 < 1:
        raise ValueError("k1 and k2 must be positive integers")
    if not (a1 > 0 and a2 > 0):
        raise ValueError("a1 and a2 must be positive")


def example_p_coefficient(k1, k2, a1, a2, lat):
    """Frequency-side c with c_hat = 1 / ((a1 + i xi1)^(k1+1) (a2 + i xi2)^(k2+1))."""
    _check_example_params(k1, k2, a1, a2)
    if lat.n != 2:
        raise ValueError("the example lives in two dimensions")
    xi = lat.freq_grid().astype(float)
    vals = 1.0 / ((a1 + 1j * xi[..., 0]) ** (k1 + 1) * (a2 + 1j * xi[..., 1]) ** (k2 + 1))
    return spectral(lat, vals)


def example_p_field(k1, k2, a1, a2, lat):
    """Real physical samples of the example coefficient."""
    return np.real(example_p_coefficient(k1, k2, a1, a2, lat).phys())


def example_p_symbol(k1, k2, a1, a2, lat):
    """P(x, xi) = i c(x) xi1 - xi1 + xi2^2, of order 1 for M = (1, 2)."""
    c = example_p_field(k1, k2, a1, a2, lat).astype(complex)
    one = np.ones(lat.shape, dtype=complex)
    return Separable(lat, [(c, lambda xi: 1j * xi[..., 0]),
                           (one, lambda xi: -xi[..., 0] + xi[..., 1] ** 2)], name="example-p")


def parabola_distance(M, dirs):
    """M-angular distance of each direction to the points of xi1 = xi2^2 on the unit sphere."""
    from .microlocal import m_angular_distance

    w1 = 2 ** -0.5
    w2 = 2 ** -0.25
    pts = [np.array([w1, w2]), np.array([w1, -w2])]
    return np.min([m_angular_distance(M, dirs, np.broadcast_to(q, dirs.shape)) for q in pts], axis=0)


# serialization helpers

def write_tensor_csv(values, lat, path, stride=1):
    """Rows (x indices, xi, re, im) of a symbol tensor with shape (*x, *xi)."""
    n = lat.n
    xs = [range(0, N, stride) for N in lat.sizes]
    freqs = lat.freq_grid().reshape(-1, n)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow([f"i{j}" for j in range(n)] + [f"k{j}" for j in range(n)] + ["re", "im"])
        for idx in np.ndindex(*[len(r) for r in xs]):
            xi_idx = tuple(xs[j][idx[j]] for j in range(n))
            row = values[xi_idx].reshape(-1)
            for k, z in zip(freqs, row):
                w.writerow(list(xi_idx) + [int(c) for c in k] + [repr(float(z.real)), repr(float(z.imag))])


def _write_rows(path, header, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for row in rows:
            w.writerow([format(v, ".17g") if isinstance(v, float) else v for v in row])


def _write_json(path, obj):
    with open(path, "w") as fh:
        fh.write(dumps(obj) + "\n")


def _p(value):
    return math.inf if str(value) in ("inf", "infinity") else float(value)


def _lattice(text):
    return FrequencyLattice.parse(text) if isinstance(text, str) else FrequencyLattice(tuple(text))


def _check(value, passed, threshold):
    return {"value": value, "threshold": threshold, "passed": bool(passed)}


# suites; each returns {"checks": {...}, "data": {...}} and writes into ``out`` when given

DEFAULTS = {
    "seed": 0,
    "partition": {"lattices": ["64x64", "128x128"], "M": "1,2", "K": 2.0, "tolerance": 1e-12},
    "norms": {"lattice": "64x64", "M": "1,2", "K": 2.0, "functions": 100, "modes": 8,
              "pairs": [[0, 1], [1, 2], [2, "inf"]]},
    "paraproduct": {"lattices": ["64x64", "128x128"], "M": "1,2", "K": 2.0, "symbols": 50,
                    "quantize_symbols": 20, "s": 1.0, "r": 2.0, "delta": 0.5, "p": 2.0,
                    "trials": 32, "band": [16, 16], "tolerance": 1e-12, "stability": 2.0},
    "split": {"lattices": ["32x32", "64x64"], "M": "1,2", "K": 2.0, "delta": 0.25, "m": 1.0,
              "r": 4, "p": "inf", "k": [8, 14], "a": [1.0, 1.0], "mollifier_lattice": "1024x64",
              "betas": [[1, 0], [0, 1], [3, 0], [2, 2]], "slope_tolerance": 0.2, "stability": 2.0},
    "parametrix": {"modes": 16, "N_terms": [1, 2, 3], "c0": 1.0, "R": 1.0, "bound": 0.1},
    "wavefront": {"lattice": "256x128", "M": "1,2", "K": 2.0, "s": 2.0, "p": "inf", "directions": 16,
                  "x_grid": [8, 4], "radius": 0.9, "aperture": 0.25, "threshold": 0.1,
                  "k": [1, 1], "a": [2.0, 2.0]},
    "example-p": {"lattices": ["64x64", "128x128", "256x256"], "M": "1,2", "r": 4, "a": [1.0, 1.0],
                  "k_above": [5, 9], "k_threshold": [3, 7], "bounded_growth": 0.05, "unbounded_growth": 0.5,
                  "char_lattice": "64x64", "char_k": [1, 1], "char_a": [2.0, 2.0], "char_stride": 4,
                  "directions": 64, "threshold": 0.1, "distance": 0.1, "c_floor": 0.1, "agreement": 0.95},
}

ROUNDOFF = 1e-12

SUITES = ("partition", "norms", "paraproduct", "split", "parametrix", "wavefront", "example-p")


def suite_partition(cfg, seed, out=None):
    M = as_anisotropy(cfg["M"])
    checks, data = {}, {}
    for text in cfg["lattices"]:
        lat = _lattice(text)
        part = build_partition(lat, M, cfg["K"])
        err = part.unity_error()
        supp = part.support_violations()
        over = part.overlap_violations()
        data[lat.label()] = {"h_max": part.h_max, "unity_error": err, "support_violations": supp,
                             "overlap_violations": over, "overlap_bound": overlap_bound(cfg["K"]),
                             "max_active": int(part.active_counts().max())}
        checks[f"unity_{lat.label()}"] = _check(err, err <= cfg["tolerance"], cfg["tolerance"])
        checks[f"support_{lat.label()}"] = _check(supp, supp == 0, 0)
        checks[f"overlap_{lat.label()}"] = _check(over, over == 0, 0)
        if out:
            write_partition_csv(part, os.path.join(out, f"partition_{lat.label()}"))
    return {"checks": checks, "data": data}


def suite_norms(cfg, seed, out=None):
    M = as_anisotropy(cfg["M"])
    lat = _lattice(cfg["lattice"])
    part = build_partition(lat, M, cfg["K"])
    rng = np.random.default_rng(seed)
    funcs = [random_band_limited(lat, rng, modes=cfg["modes"]) for _ in range(cfg["functions"])]
    checks, data, rows = {}, {}, []
    for s, p in cfg["pairs"]:
        p = _p(p)
        C = equivalence_constant(s, p, cfg["K"], part.h_max)
        ratios = []
        for i, u in enumerate(funcs):
            rec = norm_record(u, s, p, M, part)
            ratios.append(rec["ratio"])
            rows.append([i, float(s), "inf" if math.isinf(p) else float(p), rec["value"], rec["dyadic_value"],
                         rec["ratio"]])
        lo, hi = min(ratios), max(ratios)
        key = f"s{s}_p{'inf' if math.isinf(p) else int(p)}"
        data[key] = {"C": C, "min_ratio": lo, "max_ratio": hi}
        # the ratios are computed in floating point; compare at roundoff level
        ok = lo >= (1 / C) * (1 - ROUNDOFF) and hi <= C * (1 + ROUNDOFF)
        checks[f"equivalence_{key}"] = _check([lo, hi], ok, [1 / C, C])
    if out:
        _write_rows(os.path.join(out, "norms.csv"), ["function", "s", "p", "norm", "dyadic_norm", "ratio"], rows)
    return {"checks": checks, "data": data}


def random_grid_tensor(lat, rng):
    vals = rng.standard_normal(lat.shape + lat.shape) + 1j * rng.standard_normal(lat.shape + lat.shape)
    return GridTensor(lat, vals)


def dense_discrepancy(a, u):
    """max |a(x,D)u - A u_hat| on the frequency side, A the dense matrix."""
    from .quantize import dense_matrix, kohn_nirenberg_apply

    v = kohn_nirenberg_apply(a, u).freq().reshape(-1)
    dense = dense_matrix(a, u.lattice) @ u.freq().reshape(-1)
    return float(np.max(np.abs(v - dense)))


def random_elementary(part, rng, terms=3):
    """Elementary symbol sum_h d_h(x) phi_h(xi) with random trigonometric d_h."""
    lat = part.lattice
    out = []
    for h in part.shells:
        d = random_band_limited(lat, rng, modes=terms).phys()
        out.append((np.asarray(d), part.phi(h)))
    return Elementary(lat, out, list(part.shells), part.K)


def analytic_elementary(part):
    """Elementary symbol with the same trigonometric d_h on every lattice that resolves it."""
    lat = part.lattice
    x = lat.x_grid()
    d = (1 + 0.5 * np.cos(20 * x[..., 0] + 4 * x[..., 1]) + 0.25 * np.cos(28 * x[..., 1])).astype(complex)
    return Elementary(lat, [(d, part.phi(h)) for h in part.shells], list(part.shells), part.K)


def suite_paraproduct(cfg, seed, out=None):
    from .quantize import kohn_nirenberg_apply, paraproduct_certificates, paraproduct_split, verify_paraproduct_bounds

    M = as_anisotropy(cfg["M"])
    rng = np.random.default_rng(seed)
    checks, data = {}, {}
    # quantization against the dense oracle, n = 1
    worst = 0.0
    for _ in range(cfg["quantize_symbols"]):
        lat1 = FrequencyLattice((int(rng.choice([8, 16, 32])),))
        a = random_grid_tensor(lat1, rng)
        u = random_band_limited(lat1, rng, modes=4, fraction=1.0)
        worst = max(worst, dense_discrepancy(a, u))
    data["quantize_max_error"] = worst
    checks["quantize_dense"] = _check(worst, worst <= cfg["tolerance"], cfg["tolerance"])
    # reconstruction and certificates on the first lattice
    lat = _lattice(cfg["lattices"][0])
    part = build_partition(lat, M, cfg["K"])
    N0 = overlap_bound(cfg["K"]) + 2
    rec_err, viol, pairs = 0.0, 0, 0
    for _ in range(cfg["symbols"]):
        a = random_elementary(part, rng)
        u = random_band_limited(lat, rng, modes=8)
        T = paraproduct_split(a, u, part, N0)
        whole = kohn_nirenberg_apply(a, u)
        rec_err = max(rec_err, float(np.max(np.abs(sum(t.freq() for t in T) - whole.freq()))))
        cert = paraproduct_certificates(a, u, part, N0)
        viol += cert["violations"]
        pairs += cert["pairs_checked"]
    data["reconstruction_error"] = rec_err
    data["certificates"] = {"N0": N0, "pairs_checked": pairs, "violations": viol}
    checks["paraproduct_reconstruction"] = _check(rec_err, rec_err <= cfg["tolerance"], cfg["tolerance"])
    checks["paraproduct_certificates"] = _check(viol, viol == 0, 0)
    # grid stability of the normalized norm ratios
    syms, parts = [], []
    for text in cfg["lattices"]:
        latk = _lattice(text)
        pk = build_partition(latk, M, cfg["K"])
        syms.append(analytic_elementary(pk))
        parts.append(pk)
    res = verify_paraproduct_bounds(syms, parts, cfg["s"], cfg["r"], cfg["delta"], _p(cfg["p"]),
                                    trials=cfg["trials"], seed=seed, band=tuple(cfg["band"]))
    data["ratios"] = {run["lattice"]: run["estimates"] for run in res["runs"]}
    data["spread"] = res["spread"]
    for k, v in res["spread"].items():
        checks[f"stability_{k}"] = _check(v, v < cfg["stability"], cfg["stability"])
    if out:
        rows = [[run["lattice"], k, v] for run in res["runs"] for k, v in sorted(run["estimates"].items())]
        _write_rows(os.path.join(out, "paraproduct_ratios.csv"), ["lattice", "piece", "estimate"], rows)
    return {"checks": checks, "data": data}


def suite_split(cfg, seed, out=None):
    from .split import taylor_split, verify_mollifier_bounds, verify_split_classes

    M = as_anisotropy(cfg["M"])
    k1, k2 = cfg["k"]
    a1, a2 = cfg["a"]
    r, p = cfg["r"], _p(cfg["p"])
    checks, data = {}, {}
    # mollifier scaling laws
    mlat = _lattice(cfg["mollifier_lattice"])
    c = example_p_coefficient(k1, k2, a1, a2, mlat)
    tol = cfg["slope_tolerance"]
    rows = []
    for beta in cfg["betas"]:
        res = verify_mollifier_bounds(c, r, p, M, beta, t=1.0)
        tag = "".join(str(b) for b in beta)
        data[f"mollifier_beta{tag}"] = {"operator_slopes": res["operator_slopes"], "slopes": res["slopes"],
                                        "predicted": res["predicted"], "kappa": str(res["kappa"])}
        for key in ("i", "ii", "iii", "iii_tail"):
            got, want = res["operator_slopes"][key], res["predicted"][key]
            if key in ("ii", "iii_tail") and tag != "".join(str(b) for b in cfg["betas"][0]):
                continue
            checks[f"mollifier_{key}_beta{tag}"] = _check(got, abs(got - want) <= tol, [want - tol, want + tol])
        for row in res["rows"]:
            rows.append([tag] + [row[k] for k in ("eps", "i", "ii", "iii", "iii_tail",
                                                  "op_i", "op_ii", "op_iii", "op_iii_tail")])
    # the split of the example symbol on two lattices
    consts = []
    for text in cfg["lattices"]:
        lat = _lattice(text)
        part = build_partition(lat, M, cfg["K"])
        P = example_p_symbol(k1, k2, a1, a2, lat)
        res = taylor_split(P, cfg["delta"], part, r, p)
        err = res.reconstruction_error()
        cls = verify_split_classes(res, cfg["m"], max_orders=(2, 2))
        sharp = cls["a_sharp"].max_constant()
        natural = cls["a_natural"].max_constant() if cls["a_natural"] is not None else 0.0
        finite = cls["a_sharp"].all_finite() and (cls["a_natural"] is None or cls["a_natural"].all_finite())
        consts.append((sharp, natural))
        data[f"split_{lat.label()}"] = {"reconstruction_error": err, "a_sharp": cls["a_sharp"].to_dict(),
                                        "a_natural": None if cls["a_natural"] is None else cls["a_natural"].to_dict(),
                                        "reduced_order": cls["reduced_order"]}
        checks[f"split_reconstruction_{lat.label()}"] = _check(err, err <= 1e-12, 1e-12)
        checks[f"split_finite_{lat.label()}"] = _check(finite, finite, True)
        if out:
            res.export(os.path.join(out, f"split_{lat.label()}"), stride=max(1, lat.sizes[0] // 8))
    for j, name in enumerate(("a_sharp", "a_natural")):
        vals = [cc[j] for cc in consts]
        ratio = max(vals) / min(vals) if min(vals) > 0 else math.inf
        checks[f"split_stability_{name}"] = _check(ratio, ratio < cfg["stability"], cfg["stability"])
    if out:
        _write_rows(os.path.join(out, "mollifier.csv"),
                    ["beta", "eps", "i", "ii", "iii", "iii_tail", "op_i", "op_ii", "op_iii", "op_iii_tail"], rows)
    return {"checks": checks, "data": data}


def parametrix_test_symbol(lat):
    x = lat.x_grid()[..., 0]
    return Separable(lat, [((2 + np.sin(x)).astype(complex), lambda xi: np.sqrt(1 + xi[..., 0] ** 2))],
                     name="(2+sin x)<xi>")


def suite_parametrix(cfg, seed, out=None):
    from .parametrix import dense_residual, neumann_parametrix, parametrix_manifest, residual_symbol_per_shell

    lat = FrequencyLattice((int(cfg["modes"]),))
    a = parametrix_test_symbol(lat)
    rows, residuals = [], {}
    for calculus in ("lattice", "taylor"):
        for N in cfg["N_terms"]:
            b = neumann_parametrix(a, lat, 1, N, 0.0, (1,), cfg["c0"], cfg["R"], calculus=calculus)
            res = dense_residual(a, b, lat)
            residuals[(calculus, N)] = res
            rows.append([calculus, N, res])
    seq = [residuals[("lattice", N)] for N in cfg["N_terms"]]
    checks = {
        "parametrix_decrease": _check(seq[:2], seq[1] < seq[0], "strict"),
        "parametrix_bound": _check(seq[-1], seq[-1] <= cfg["bound"], cfg["bound"]),
    }
    data = {"dense_residuals": {f"{c}_{n}": v for (c, n), v in residuals.items()}}
    if out:
        _write_rows(os.path.join(out, "parametrix.csv"), ["calculus", "N_terms", "dense_residual"], rows)
        N = cfg["N_terms"][-1]
        b = neumann_parametrix(a, lat, 1, N, 0.0, (1,), cfg["c0"], cfg["R"])
        shells = residual_symbol_per_shell(a, b, lat, N, (1,))
        _write_json(os.path.join(out, "parametrix_manifest.json"),
                    parametrix_manifest(1, N, cfg["c0"], cfg["R"], shells, lat))
    return {"checks": checks, "data": data}


def kink_function(lat, axis=1):
    """Triangle-wave profile in one coordinate: coefficients -1/k^2 on that axis."""
    xi = lat.freq_grid()
    k = xi[..., axis].astype(float)
    others = np.all(np.delete(xi, axis, axis=-1) == 0, axis=-1)
    vals = np.where(others & (k != 0), -1.0 / np.where(k == 0, 1.0, k) ** 2, 0.0)
    return spectral(lat, vals.astype(complex))


def wavefront_battery(lat, M, k, a):
    x = lat.x_grid()
    return {
        "weight": (weight_symbol(M, 1.0), 1.0),
        "parabola": (Multiplier(fn=lambda xi: xi[..., 0] - xi[..., 1] ** 2, name="xi1-xi2^2"), 1.0),
        "xmultiplier": (XMultiplier(physical(lat, 2 + np.sin(x[..., 0]))), 0.0),
        "example-p": (example_p_symbol(k[0], k[1], a[0], a[1], lat), 1.0),
    }


def suite_wavefront(cfg, seed, out=None):
    from .microlocal import wavefront_scan
    from .quantize import kohn_nirenberg_apply

    M = as_anisotropy(cfg["M"])
    lat = _lattice(cfg["lattice"])
    part = build_partition(lat, M, cfg["K"])
    p = _p(cfg["p"])
    s = cfg["s"]
    gx, gy = cfg["x_grid"]
    idx = [(lat.sizes[0] // gx * i, lat.sizes[1] // gy * j) for i in range(gx) for j in range(gy)]
    pts = [tuple(2 * math.pi * t / N for t, N in zip(k, lat.sizes)) for k in idx]
    radius = cfg["radius"] * math.pi
    u = kink_function(lat, axis=1)
    W = wavefront_scan(u, pts, cfg["directions"], s, p, M, part, cfg["aperture"], radius=radius)
    checks, data, rows = {}, {"u_flagged": len(W.flagged())}, []
    for name, (a, m) in wavefront_battery(lat, M, cfg["k"], cfg["a"]).items():
        au = kohn_nirenberg_apply(a, u)
        Wa = wavefront_scan(au, pts, W.directions, s - m, p, M, part, cfg["aperture"], radius=radius)
        cs = char_set(a, lat, m, M, threshold=cfg["threshold"], directions=W.directions, x_indices=idx)
        char = {(idx.index(xk), d) for xk, d in cs.flagged()}
        A, U = Wa.flagged(), W.flagged()
        first = sorted(A - U)
        second = sorted(U - (A | char))
        data[name] = {"flagged_au": len(A), "flagged_u": len(U), "char": len(char),
                      "violations_au_in_u": first, "violations_u_in_au_char": second}
        checks[f"inclusion_{name}"] = _check(len(first) + len(second), not first and not second, 0)
        rows.append([name, len(A), len(U), len(char), len(first), len(second)])
        if out:
            Wa.write_csv(os.path.join(out, f"wavefront_{name}.csv"))
    if out:
        W.write_csv(os.path.join(out, "wavefront_u.csv"))
        _write_rows(os.path.join(out, "inclusions.csv"),
                    ["symbol", "flagged_au", "flagged_u", "char", "au_not_in_u", "u_not_in_au_or_char"], rows)
    return {"checks": checks, "data": data}


def membership_growth(k1, k2, a1, a2, r, lattices, M):
    """sup <xi>_M^r |c_hat| on each lattice."""
    out = []
    for text in lattices:
        lat = _lattice(text)
        c = example_p_coefficient(k1, k2, a1, a2, lat)
        out.append(float(np.max(m_weight(M, lat.freq_grid()) ** r * np.abs(c.freq()))))
    return out


def char_agreement(cfg):
    M = as_anisotropy(cfg["M"])
    lat = _lattice(cfg["char_lattice"])
    k1, k2 = cfg["char_k"]
    a1, a2 = cfg["char_a"]
    P = example_p_symbol(k1, k2, a1, a2, lat)
    c = example_p_field(k1, k2, a1, a2, lat)
    st = cfg["char_stride"]
    idx = [(i, j) for i in range(0, lat.sizes[0], st) for j in range(0, lat.sizes[1], st)]
    cs = char_set(P, lat, 1, M, threshold=cfg["threshold"], directions=cfg["directions"], x_indices=idx)
    near = parabola_distance(M, cs.directions) <= cfg["distance"]
    agree = total = 0
    floor = cfg["c_floor"] * np.max(np.abs(c))
    for row, (i, j) in enumerate(idx):
        inside = 0 < i < lat.sizes[0] // 2 and 0 < j < lat.sizes[1] // 2
        if inside and abs(c[i, j]) < floor:
            continue
        expected = np.zeros(len(near), dtype=bool) if inside else near
        agree += int(np.sum(cs.flags[row] == expected))
        total += len(near)
    return agree / total, total, cs


def suite_example_p(cfg, seed, out=None):
    M = as_anisotropy(cfg["M"])
    a1, a2 = cfg["a"]
    r = cfg["r"]
    checks, data = {}, {}
    above = membership_growth(*cfg["k_above"], a1, a2, r, cfg["lattices"], M)
    at = membership_growth(*cfg["k_threshold"], a1, a2, r, cfg["lattices"], M)
    g_above = above[-1] / above[0] - 1
    g_at = at[-1] / at[0] - 1
    data["sup_weighted_above"] = above
    data["sup_weighted_threshold"] = at
    checks["membership_above_threshold"] = _check(g_above, g_above < cfg["bounded_growth"], cfg["bounded_growth"])
    checks["membership_at_threshold"] = _check(g_at, g_at > cfg["unbounded_growth"], cfg["unbounded_growth"])
    frac, total, cs = char_agreement(cfg)
    data["char_agreement"] = {"fraction": frac, "pairs": total}
    checks["char_set_agreement"] = _check(frac, frac >= cfg["agreement"], cfg["agreement"])
    if out:
        lat = _lattice(cfg["char_lattice"])
        cs.write_csv(os.path.join(out, "char_set.csv"), lat)
        write_grid_function(example_p_coefficient(*cfg["char_k"], *cfg["char_a"], lat),
                            os.path.join(out, "c_hat"))
        _write_rows(os.path.join(out, "membership.csv"), ["lattice", "sup_above", "sup_threshold"],
                    [[t, x, y] for t, x, y in zip(cfg["lattices"], above, at)])
    return {"checks": checks, "data": data}


RUNNERS = {
    "partition": suite_partition,
    "norms": suite_norms,
    "paraproduct": suite_paraproduct,
    "split": suite_split,
    "parametrix": suite_parametrix,
    "wavefront": suite_wavefront,
    "example-p": suite_example_p,
}


class UsageError(ValueError):
    pass


def effective_config(config):
    """Defaults overlaid with the user's sections; unknown suites are rejected."""
    config = dict(config or {})
    suites = config.get("suites", list(SUITES))
    if not isinstance(suites, list):
        raise UsageError("'suites' must be a list")
    for name in suites:
        if name not in RUNNERS:
            raise UsageError(f"unknown suite {name!r}; choose from {', '.join(SUITES)}")
    eff = {"suites": suites, "seed": int(config.get("seed", DEFAULTS["seed"]))}
    for name in suites:
        sec = copy.deepcopy(DEFAULTS[name])
        extra = config.get(name, {})
        if not isinstance(extra, dict):
            raise UsageError(f"section {name!r} must be an object")
        sec.update(extra)
        eff[name] = sec
    return eff


def run_suite(config, out, jobs=1):
    """Run the configured suites; returns (exit code, manifest).  Exit code 1 iff a check fails."""
    eff = effective_config(config)
    if not eff["suites"]:
        return 0, {"config": eff, "suites": {}, "passed": True}
    os.makedirs(out, exist_ok=True)

    def one(name):
        target = os.path.join(out, name)
        os.makedirs(target, exist_ok=True)
        return RUNNERS[name](eff[name], eff["seed"], target)

    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            results = dict(zip(eff["suites"], pool.map(one, eff["suites"])))
    else:
        results = {name: one(name) for name in eff["suites"]}
    passed = all(c["passed"] for res in results.values() for c in res["checks"].values())
    manifest = {"config": eff, "suites": results, "passed": passed}
    _write_json(os.path.join(out, "manifest.json"), manifest)
    return (0 if passed else 1), manifest


# command line

def _parse_M(text):
    return AnisotropyVector.parse(text)


def _emit(obj, as_json):
    if as_json:
        print(dumps(obj))
    else:
        for k in sorted(obj):
            v = obj[k]
            print(f"{k}: {v if not isinstance(v, float) else format(v, '.6g')}")


def cmd_norm(args):
    lat = FrequencyLattice.parse(args.lattice)
    M = _parse_M(args.M)
    part = build_partition(lat, M, args.K)
    u = random_band_limited(lat, np.random.default_rng(args.seed), modes=args.modes)
    return norm_record(u, args.s, _p(args.p), M, part)


def cmd_decompose(args):
    lat = FrequencyLattice.parse(args.lattice)
    M = _parse_M(args.M)
    part = build_partition(lat, M, args.K)
    u = random_band_limited(lat, np.random.default_rng(args.seed), modes=args.modes)
    blocks = dyadic_blocks(u, part)
    if args.out:
        os.makedirs(args.out, exist_ok=True)
        write_partition_csv(part, os.path.join(args.out, "partition"))
        write_grid_function(u, os.path.join(args.out, "u"))
        for h, b in zip(part.shells, blocks):
            write_grid_function(b, os.path.join(args.out, f"block_h{h}"))
    return {"lattice": lat.label(), "M": M.label(), "h_max": part.h_max, "unity_error": part.unity_error(),
            "block_norms": [fl_norm(b, FLParams(args.s, _p(args.p), M)) for b in blocks],
            "dyadic_norm": fl_dyadic_norm(blocks, args.s, _p(args.p))}


def cmd_quantize(args):
    lat = FrequencyLattice((args.modes,))
    rng = np.random.default_rng(args.seed)
    a = random_grid_tensor(lat, rng)
    u = random_band_limited(lat, rng, modes=4, fraction=1.0)
    err = dense_discrepancy(a, u)
    return {"modes": args.modes, "seed": args.seed, "max_error_vs_dense": err}


def cmd_probe(args):
    from .quantize import probe_record

    lat = FrequencyLattice.parse(args.lattice)
    M = _parse_M(args.M)
    a = weight_symbol(M, args.m)
    return probe_record(f"<xi>^{args.m}", a, lat, args.s, args.s - args.m, _p(args.p), M,
                        trials=args.trials, seed=args.seed)


def cmd_split(args):
    from .split import taylor_split

    lat = FrequencyLattice.parse(args.lattice)
    M = _parse_M(args.M)
    part = build_partition(lat, M, args.K)
    P = example_p_symbol(args.k1, args.k2, args.a1, args.a2, lat)
    res = taylor_split(P, args.delta, part, args.r, _p(args.p))
    if args.out:
        res.export(args.out, stride=max(1, lat.sizes[0] // 8))
    rec = res.manifest()
    rec["reconstruction_error"] = res.reconstruction_error()
    return rec


def cmd_parametrix(args):
    from .parametrix import dense_residual, neumann_parametrix

    lat = FrequencyLattice((args.modes,))
    a = parametrix_test_symbol(lat)
    out = {}
    for N in range(1, args.N_terms + 1):
        b = neumann_parametrix(a, lat, 1, N, 0.0, (1,), 1.0, 1.0, calculus=args.calculus)
        out[str(N)] = dense_residual(a, b, lat)
    return {"symbol": "(2+sin x)<xi>", "modes": args.modes, "calculus": args.calculus, "dense_residual": out}


def cmd_wavefront(args):
    cfg = copy.deepcopy(DEFAULTS["wavefront"])
    cfg.update({"lattice": args.lattice, "M": args.M, "s": args.s})
    res = suite_wavefront(cfg, args.seed, args.out)
    return {"checks": res["checks"], "data": res["data"]}


def cmd_example_p(args):
    lat = FrequencyLattice.parse(args.lattice)
    M = _parse_M(args.M)
    c = example_p_coefficient(args.k1, args.k2, args.a1, args.a2, lat)
    P = example_p_symbol(args.k1, args.k2, args.a1, args.a2, lat)
    inside = (lat.sizes[0] // 8, lat.sizes[1] // 8)
    ok, _ = is_m_elliptic(P, lat, 1, 0.01, 4.0, M, x_mask=_single(lat, inside))
    if args.out:
        os.makedirs(args.out, exist_ok=True)
        write_grid_function(c, os.path.join(args.out, "c_hat"))
    return {"k": [args.k1, args.k2], "a": [args.a1, args.a2], "lattice": lat.label(),
            "c_hat_origin": float(np.real(c.freq()[(0,) * lat.n])),
            "sup_weighted": float(np.max(m_weight(M, lat.freq_grid()) ** args.r * np.abs(c.freq()))),
            "elliptic_inside_quadrant": ok}


def _single(lat, idx):
    mask = np.zeros(lat.shape, dtype=bool)
    mask[idx] = True
    return mask


def cmd_suite(args):
    config = {}
    if args.config:
        with open(args.config) as fh:
            try:
                config = json.load(fh)
            except json.JSONDecodeError as exc:
                raise UsageError(f"malformed config: {exc}") from exc
    if args.suites is not None:
        config["suites"] = args.suites
    if args.seed is not None:
        config["seed"] = args.seed
    code, manifest = run_suite(config, args.out, jobs=args.jobs)
    summary = {name: {k: c["passed"] for k, c in res["checks"].items()} for name, res in manifest["suites"].items()}
    return {"passed": manifest["passed"], "checks": summary, "out": args.out}, code


def build_parser():
    parser = argparse.ArgumentParser(prog="anisofl", description="Anisotropic Fourier-Lebesgue toolkit")
    parser.add_argument("--json", action="store_true", help="print JSON output")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, lattice="64x64"):
        p.add_argument("--lattice", default=lattice)
        p.add_argument("--M", default="1,2")
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--out", default=None)
        p.add_argument("--json", action="store_true", default=argparse.SUPPRESS)

    def example(p):
        p.add_argument("--k1", type=int, default=5)
        p.add_argument("--k2", type=int, default=9)
        p.add_argument("--a1", type=float, default=1.0)
        p.add_argument("--a2", type=float, default=1.0)

    p = sub.add_parser("norm", help="FL norm and dyadic norm of a random band-limited function")
    common(p)
    p.add_argument("--s", type=float, default=1.0)
    p.add_argument("--p", default="2")
    p.add_argument("--K", type=float, default=2.0)
    p.add_argument("--modes", type=int, default=8)
    p.set_defaults(func=cmd_norm)

    p = sub.add_parser("decompose", help="dyadic blocks of a random function")
    common(p)
    p.add_argument("--s", type=float, default=1.0)
    p.add_argument("--p", default="2")
    p.add_argument("--K", type=float, default=2.0)
    p.add_argument("--modes", type=int, default=8)
    p.set_defaults(func=cmd_decompose)

    p = sub.add_parser("quantize", help="Kohn-Nirenberg application against the dense oracle (n = 1)")
    common(p)
    p.add_argument("--modes", type=int, default=16)
    p.set_defaults(func=cmd_quantize)

    p = sub.add_parser("probe", help="randomized operator-norm probe of <D>_M^m")
    common(p)
    p.add_argument("--m", type=float, default=1.0)
    p.add_argument("--s", type=float, default=1.0)
    p.add_argument("--p", default="2")
    p.add_argument("--trials", type=int, default=32)
    p.set_defaults(func=cmd_probe)

    p = sub.add_parser("split", help="split the example symbol into smooth and rough parts")
    common(p, "32x32")
    example(p)
    p.add_argument("--delta", type=float, default=0.25)
    p.add_argument("--r", type=float, default=4)
    p.add_argument("--p", default="inf")
    p.add_argument("--K", type=float, default=2.0)
    p.set_defaults(func=cmd_split)

    p = sub.add_parser("parametrix", help="Neumann parametrix residuals of (2+sin x)<xi>")
    common(p)
    p.add_argument("--modes", type=int, default=16)
    p.add_argument("--N-terms", dest="N_terms", type=int, default=3)
    p.add_argument("--calculus", choices=["lattice", "taylor"], default="lattice")
    p.set_defaults(func=cmd_parametrix)

    p = sub.add_parser("wavefront", help="wave-front scans and inclusion checks")
    common(p, "256x128")
    p.add_argument("--s", type=float, default=2.0)
    p.set_defaults(func=cmd_wavefront)

    p = sub.add_parser("example-p", help="the Heaviside-exponential coefficient and its operator")
    common(p)
    example(p)
    p.add_argument("--r", type=float, default=4)
    p.set_defaults(func=cmd_example_p)

    p = sub.add_parser("suite", help="run verification suites and write artifacts")
    p.add_argument("--config", default=None)
    p.add_argument("--out", default="artifacts")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--suites", nargs="*", default=None)
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--json", action="store_true", default=argparse.SUPPRESS)
    p.set_defaults(func=cmd_suite)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        result = args.func(args)
    except UsageError as exc:
        parser.error(str(exc))
    code = 0
    if isinstance(result, tuple):
        result, code = result
    _emit(result, args.json)
    return code


if __name__ == "__main__":
    sys.exit(main())
