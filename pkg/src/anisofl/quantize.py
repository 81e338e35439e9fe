"""Kohn-Nirenberg quantization on the torus, Fourier multipliers, the three-piece
paraproduct split of elementary symbols and randomized operator-norm probes."""
import math

import numpy as np
from scipy.signal import fftconvolve

from .dyadic import overlap_bound
from .flnorm import FLParams, conjugate, fl_norm, fl_norm_values, lp
from .lattice import FREQUENCY, PHYSICAL, GridFunction, random_band_limited
from .mweight import as_anisotropy, m_norm, m_weight, subadditivity_bound
from .symbol import (
    CHUNK,
    Elementary,
    Multiplier,
    ScaledSymbol,
    Separable,
    SumSymbol,
    XMultiplier,
    _profile,
)

DEFAULT_BUDGET = 2**27


def apply_multiplier(a, u):
    vals = a.on(u.lattice)
    if not np.all(np.isfinite(vals)):
        raise ValueError("multiplier is not finite at every lattice frequency")
    return GridFunction(u.lattice, FREQUENCY, vals * u.freq())


def _direct_sum(a, u, budget):
    """v(x) = sum over the support of u-hat of a(x, xi) u-hat(xi) e^{i x xi}."""
    lat = u.lattice
    uh = u.freq()
    nz = np.argwhere(uh != 0)
    if len(nz) * lat.count > budget:
        raise MemoryError("quantization loop exceeds the configured budget")
    freqs = lat.freq_grid()[tuple(nz.T)].astype(float)
    coef = uh[tuple(nz.T)]
    x = lat.x_grid()
    v = np.zeros(lat.shape, dtype=complex)
    for i in range(0, len(freqs), CHUNK):
        xi = freqs[i:i + CHUNK]
        sl = a.slices(lat, xi)
        phase = np.exp(1j * np.tensordot(xi, x, axes=([1], [x.ndim - 1])))
        v += np.tensordot(coef[i:i + CHUNK], sl * phase, axes=(0, 0))
    return v


def kohn_nirenberg_apply(a, u, budget=DEFAULT_BUDGET):
    """a(x, D) u with v(x) = sum_xi e^{i x xi} a(x, xi) u-hat(xi)."""
    lat = u.lattice
    if isinstance(a, Multiplier):
        return apply_multiplier(a, u)
    if isinstance(a, XMultiplier):
        return GridFunction(lat, PHYSICAL, a.d * u.phys())
    if isinstance(a, Separable):
        uh = u.freq()
        out = np.zeros(lat.shape, dtype=complex)
        for d, g in a.terms:
            prof = _profile(g, lat, lat.freq_grid())
            out += d * np.fft.ifftn(prof * uh) * lat.count
        return GridFunction(lat, PHYSICAL, out)
    if isinstance(a, SumSymbol):
        parts = [kohn_nirenberg_apply(p, u, budget) for p in a.parts]
        return GridFunction(lat, FREQUENCY, sum(p.freq() for p in parts))
    if isinstance(a, ScaledSymbol):
        return kohn_nirenberg_apply(a.a, u, budget).scale(a.c)
    return GridFunction(lat, PHYSICAL, _direct_sum(a, u, budget))


def dense_matrix(a, lat, max_modes=4096):
    """Matrix of a(x, D) acting on frequency-side coefficients (flat storage order)."""
    if lat.count > max_modes:
        raise MemoryError("dense oracle limited to %d modes" % max_modes)
    xi = lat.freq_grid().reshape(-1, lat.n).astype(float)
    x = lat.x_grid()
    cols = []
    for i in range(0, len(xi), CHUNK):
        sl = a.slices(lat, xi[i:i + CHUNK])
        phase = np.exp(1j * np.tensordot(xi[i:i + CHUNK], x, axes=([1], [x.ndim - 1])))
        f = np.fft.fftn(sl * phase, axes=tuple(range(1, lat.n + 1))) / lat.count
        cols.append(f.reshape(len(f), -1))
    return np.concatenate(cols).T


def derivative_multiplier(j):
    """D_j = -i d/dx_j, i.e. the multiplier xi_j."""
    return Multiplier(fn=lambda xi: xi[..., j], name=f"D{j}")


def lambda_multiplier(M, j):
    """<xi>_M^(mu_min/mu_max - 2) xi_j^(2 mu_j - 1)."""
    M = as_anisotropy(M)
    if not M.integer_flag:
        raise ValueError("integer weights are required")
    e = float(M.min_order / M.max_order) - 2.0
    power = 2 * int(M.mu[j]) - 1
    return Multiplier(fn=lambda xi: m_weight(M, xi) ** e * xi[..., j] ** power, name=f"Lambda{j}")


# paraproducts

def _check_n0(part, N0):
    N0 = overlap_bound(part.K) + 2 if N0 is None else int(N0)
    if N0 < overlap_bound(part.K):
        raise ValueError(f"N0={N0} is below the shell overlap bound {overlap_bound(part.K)}")
    return N0


def _coefficient_blocks(d, part):
    dh = np.fft.fftn(d)
    return {l: np.fft.ifftn(part.phi(l) * dh) for l in part.shells}


def paraproduct_split(a, u, part, N0=None):
    """(T1 u, T2 u, T3 u) for an elementary symbol sum_h d_h(x) psi_h(xi).

    With d_{h,l} = phi_l(D) d_h and u_h = psi_h(D) u the pieces collect
    d_{h,l} u_h over l <= h - N0, |l - h| < N0 and l >= h + N0."""
    if not isinstance(a, Elementary):
        raise TypeError("paraproduct split needs an elementary symbol")
    N0 = _check_n0(part, N0)
    lat = u.lattice
    uh = u.freq()
    T = [np.zeros(lat.shape, dtype=complex) for _ in range(3)]
    for (d, g), h in zip(a.terms, a.shells):
        blocks = _coefficient_blocks(d, part)
        u_h = np.fft.ifftn(_profile(g, lat, lat.freq_grid()) * uh) * lat.count
        low = sum((blocks[l] for l in part.shells if l <= h - N0), np.zeros(lat.shape, complex))
        high = sum((blocks[l] for l in part.shells if l >= h + N0), np.zeros(lat.shape, complex))
        mid = sum((blocks[l] for l in part.shells if h - N0 < l < h + N0), np.zeros(lat.shape, complex))
        T[0] += low * u_h
        T[1] += mid * u_h
        T[2] += high * u_h
    return tuple(GridFunction(lat, PHYSICAL, t) for t in T)


def certificate_factor(M, K, N0):
    """T such that every d_{h,l} u_h with l <= h - N0 has spectrum in
    2^(h-1)/T <= |xi|_M <= T 2^(h+1); None when no such T follows."""
    C = subadditivity_bound(M)
    upper = C * K * (1 + 2.0 ** (-N0))
    gap = 1.0 / (K * C) - K * 2.0 ** (2 - N0)
    if gap <= 0:
        return None
    return max(upper, 1.0 / gap)


def _minkowski_support(a_mask, b_mask, lat):
    """Frequencies of the (non-periodic) sum set of two frequency supports."""
    A = np.fft.fftshift(a_mask).astype(float)
    B = np.fft.fftshift(b_mask).astype(float)
    S = fftconvolve(A, B, mode="full") > 0.5
    idx = np.argwhere(S)
    return idx - np.array(lat.sizes)


def paraproduct_certificates(a, u, part, N0=None):
    """Scan the T1 summands and count spectra leaving the certified shells."""
    N0 = _check_n0(part, N0)
    lat = u.lattice
    T = certificate_factor(part.M, part.K, N0)
    uh = u.freq()
    checked = violations = 0
    for (d, g), h in zip(a.terms, a.shells):
        if h < N0 - 1:
            continue
        dh = np.fft.fftn(d)
        umask = (_profile(g, lat, lat.freq_grid()) * uh) != 0
        if not umask.any():
            continue
        for l in part.shells:
            if l > h - N0:
                continue
            dmask = (part.phi(l) * dh) != 0
            if not dmask.any():
                continue
            freqs = _minkowski_support(dmask, umask, lat)
            r = m_norm(part.M, freqs)
            checked += 1
            if T is None:
                violations += 1
                continue
            lo, hi = 2.0 ** (h - 1) / T, T * 2.0 ** (h + 1)
            violations += int(np.count_nonzero((r < lo) | (r > hi)))
    return {"T": T, "N0": N0, "pairs_checked": checked, "violations": violations}


def fl_kappa(r, p, n, M):
    q = conjugate(p)
    return r - (0.0 if math.isinf(q) else n / (float(as_anisotropy(M).min_order) * q))


def paraproduct_ratios(a, part, s, r, delta, p, trials=64, seed=0, N0=None, modes=8,
                       which=("T1", "T2", "T3"), band=None):
    """Random-trial operator-norm estimates of the three pieces, each divided by
    the symbol data controlling it.

    T1: FL^p_s -> FL^p_s over sup_h ||d_h||_FL1.
    T2: FL^p_s -> FL^p_{s+(1-delta)k} over H = sup_h 2^(-delta k h) ||d_h||_FL^p_r.
    T3: FL^p_{s+(delta-1)k} -> FL^p_s over H.   Here k = r - n/(mu_min q).
    ``band`` fixes the input frequencies independently of the lattice."""
    lat = part.lattice
    M = part.M
    kap = fl_kappa(r, p, lat.n, M)
    if "T2" in which and not s > (delta - 1) * kap:
        raise ValueError("T2 bound needs s > (delta - 1)(r - n/(mu_min q))")
    if "T3" in which and not s < r:
        raise ValueError("T3 bound needs s < r")
    w = m_weight(M, lat.freq_grid())
    l1 = max(lp(np.fft.fftn(d) / lat.count, 1) for d, _ in a.terms)
    H = max(2.0 ** (-delta * kap * h) * lp(w**r * np.abs(np.fft.fftn(d) / lat.count), p)
            for (d, _), h in zip(a.terms, a.shells))
    spaces = {
        "T1": (s, s, l1),
        "T2": (s, s + (1 - delta) * kap, H),
        "T3": (s + (delta - 1) * kap, s, H),
    }
    rng = np.random.default_rng(seed)
    best = {k: 0.0 for k in which}
    for _ in range(trials):
        u = random_band_limited(lat, rng, modes=modes, band=band)
        pieces = dict(zip(("T1", "T2", "T3"), paraproduct_split(a, u, part, N0)))
        for k in which:
            s_in, s_out, norm = spaces[k]
            num = fl_norm_values(pieces[k].freq(), lat, s_out, p, M)
            den = fl_norm_values(u.freq(), lat, s_in, p, M)
            best[k] = max(best[k], num / den / norm)
    return {
        "estimates": best,
        "kappa": kap,
        "sup_FL1": l1,
        "H": H,
        "spaces": {k: spaces[k][:2] for k in which},
        "lattice": lat.label(),
    }


def verify_paraproduct_bounds(symbols, parts, s, r, delta, p, trials=64, seed=0, N0=None, modes=8,
                              which=("T1", "T2", "T3"), band=None):
    """Run ``paraproduct_ratios`` on matching (symbol, partition) pairs, e.g. one per
    lattice size, and report the spread of each estimate."""
    runs = [paraproduct_ratios(a, part, s, r, delta, p, trials, seed, N0, modes, which, band)
            for a, part in zip(symbols, parts)]
    spread = {}
    for k in runs[0]["estimates"]:
        vals = [run["estimates"][k] for run in runs]
        lo, hi = min(vals), max(vals)
        spread[k] = math.inf if lo == 0 else hi / lo
    return {"runs": runs, "spread": spread}


def operator_norm_probe(a, lat, s_in, s_out, p, M, trials=32, seed=0, modes=8):
    """max over random band-limited u of ||a(x,D)u||_{s_out} / ||u||_{s_in}."""
    if trials < 1:
        raise ValueError("at least one trial is required")
    M = as_anisotropy(M)
    rng = np.random.default_rng(seed)
    best = 0.0
    for _ in range(trials):
        u = random_band_limited(lat, rng, modes=modes)
        v = kohn_nirenberg_apply(a, u)
        best = max(best, fl_norm(v, FLParams(s_out, p, M)) / fl_norm(u, FLParams(s_in, p, M)))
    return best


def probe_record(symbol_id, a, lat, s_in, s_out, p, M, trials=32, seed=0):
    est = operator_norm_probe(a, lat, s_in, s_out, p, M, trials, seed)
    return {
        "symbol_id": symbol_id,
        "s_in": s_in,
        "s_out": s_out,
        "p": "inf" if math.isinf(float(p)) else p,
        "estimate": est,
        "trials": trials,
        "seed": seed,
        "lattice": lat.label(),
    }
