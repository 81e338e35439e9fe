"""Splitting a = a_sharp + a_natural by shell-dependent anisotropic mollification
of the x-dependence, and measurable forms of the mollifier inequalities."""
import math
import os
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .dyadic import Transition
from .flnorm import conjugate, lp
from .lattice import dumps
from .mweight import as_anisotropy, m_order, m_norm_sq, m_weight
from .symbol import (
    GridTensor,
    Multiplier,
    Separable,
    estimate_fl_class,
    estimate_kappa_class,
    kappa_stratum,
)


def smoothing_profile():
    """phi with phi = 1 for <xi>_M <= 1 and phi = 0 for <xi>_M > 2, as a function of <xi>_M."""
    return Transition(1.0, 2.0)


def smoothing_values(M, eps, xi, profile=None):
    """phi(eps^(1/M) xi); note <eps^(1/M) xi>_M = (1 + eps^2 |xi|_M^2)^(1/2)."""
    profile = profile or smoothing_profile()
    return profile(np.sqrt(1.0 + eps * eps * m_norm_sq(M, xi)))


def smoothing_multiplier(M, eps, profile=None):
    M = as_anisotropy(M)
    if not eps > 0:
        raise ValueError("epsilon must be positive")
    if not M.integer_flag:
        raise ValueError("integer weights are required")
    profile = profile or smoothing_profile()
    return Multiplier(fn=lambda xi: smoothing_values(M, eps, xi, profile), name=f"smooth[{eps}]")


def mollify(d, lat, M, eps, profile=None):
    """phi(eps^(1/M) D) applied to physical samples d."""
    if np.all(d == d.flat[0]):
        return np.array(d, dtype=complex)
    mult = smoothing_values(M, eps, lat.freq_grid(), profile)
    return np.fft.ifftn(mult * np.fft.fftn(d))


def _rational(v):
    if isinstance(v, (int, Fraction)):
        return Fraction(v)
    if isinstance(v, float) and v.is_integer():
        return Fraction(int(v))
    return None


def exact_kappa(r, p, n, M):
    """r - n/(mu_min q); a Fraction when r and p are integers or fractions."""
    M = as_anisotropy(M)
    q = conjugate(p)
    rr = _rational(r)
    if math.isinf(q):
        return rr if rr is not None else float(r)
    pp = None if math.isinf(float(p)) else _rational(p)
    qq = Fraction(1) if math.isinf(float(p)) else (pp / (pp - 1) if pp is not None else None)
    if rr is not None and qq is not None:
        return rr - Fraction(n) / (M.min_order * qq)
    return float(r) - n / (float(M.min_order) * q)


def eps_list_for(lat, M, exps=range(2, 9)):
    """Default 2^-2..2^-8, dropping scales whose transition band is not resolved."""
    M = as_anisotropy(M)
    out = []
    for e in exps:
        eps = 2.0 ** (-e)
        ok = all(eps ** (1.0 / float(mu)) * (N // 2 - 1) >= 3.0 ** (0.5 / float(mu))
                 for mu, N in zip(M.mu, lat.sizes))
        if ok:
            out.append(eps)
    return out


def _slope(eps, vals):
    eps = np.asarray(eps, float)
    vals = np.asarray(vals, float)
    ok = vals > 0
    if ok.sum() < 2:
        return float("nan")
    return float(np.polyfit(np.log2(eps[ok]), np.log2(vals[ok]), 1)[0])


def verify_mollifier_bounds(d, r, p, M, beta, eps_list=None, t=1.0):
    """Left-hand sides of the mollifier inequalities for the function d, the
    corresponding multiplier norms, and log-log slopes against eps.

    Multiplier norms are the exact operator norms on the lattice:
    sup |xi^beta phi_eps| on FL^p_r, sup <xi>^-t |1 - phi_eps| into FL^p_{r-t},
    and the l^q norms of xi^beta phi_eps <xi>^-r and (1 - phi_eps) <xi>^-r into FL^1."""
    M = as_anisotropy(M)
    lat = d.lattice
    beta = tuple(int(b) for b in beta)
    eps_list = eps_list_for(lat, M) if eps_list is None else list(eps_list)
    q = conjugate(p)
    kap = exact_kappa(r, p, lat.n, M)
    kf = float(kap)
    if not kf > 0:
        raise ValueError("the FL^1 inequalities need r > n/(mu_min q)")
    xi = lat.freq_grid().astype(float)
    w = m_weight(M, xi)
    mono = np.prod([xi[..., j] ** b for j, b in enumerate(beta)], axis=0)
    uh = d.freq()
    order = float(m_order(M, beta))
    stratum = kappa_stratum(M, beta, kap)
    rows = []
    for eps in eps_list:
        phi = smoothing_values(M, eps, xi)
        rows.append({
            "eps": eps,
            "i": lp(w**r * np.abs(mono * phi * uh), p),
            "ii": lp(w ** (r - t) * np.abs((1 - phi) * uh), p),
            "iii": lp(np.abs(mono * phi * uh), 1),
            "iii_tail": lp(np.abs((1 - phi) * uh), 1),
            "op_i": float(np.max(np.abs(mono * phi))),
            "op_ii": float(np.max(w ** (-t) * np.abs(1 - phi))),
            "op_iii": lp(np.abs(mono * phi) * w ** (-r), q),
            "op_iii_tail": lp(np.abs(1 - phi) * w ** (-r), q),
        })
    if stratum == 0:
        pred_iii = 0.0
    else:
        pred_iii = -max(order - kf, 0.0)
    predicted = {"i": -order, "ii": float(t), "iii": pred_iii, "iii_tail": kf}
    eps_arr = [row["eps"] for row in rows]
    slopes = {k: _slope(eps_arr, [row[k] for row in rows]) for k in ("i", "ii", "iii", "iii_tail")}
    op_slopes = {k: _slope(eps_arr, [row["op_" + k] for row in rows]) for k in ("i", "ii", "iii", "iii_tail")}
    return {
        "rows": rows,
        "predicted": predicted,
        "slopes": slopes,
        "operator_slopes": op_slopes,
        "kappa": kap,
        "stratum": stratum,
        "beta": beta,
        "r": r,
        "p": p,
        "t": t,
    }


@dataclass
class SplitResult:
    a_sharp: object
    a_natural: object
    delta: float
    kappa: object
    r: object
    p: object
    M: object
    K: float
    lattice: object
    source: object = field(repr=False, default=None)

    def reconstruction_error(self, chunk=64):
        lat = self.lattice
        xi = lat.freq_grid().reshape(-1, lat.n).astype(float)
        err = 0.0
        for i in range(0, len(xi), chunk):
            s = xi[i:i + chunk]
            diff = self.a_sharp.slices(lat, s) + self.a_natural.slices(lat, s) - self.source.slices(lat, s)
            err = max(err, float(np.max(np.abs(diff))))
        return err

    def manifest(self):
        return {
            "delta": self.delta,
            "kappa": str(self.kappa),
            "r": str(self.r),
            "p": "inf" if math.isinf(float(self.p)) else self.p,
            "M": self.M.label(),
            "K": self.K,
            "lattice": self.lattice.label(),
        }

    def export(self, directory, stride=1):
        from .cli import write_tensor_csv

        os.makedirs(directory, exist_ok=True)
        write_tensor_csv(self.a_sharp.tensor(self.lattice), self.lattice, os.path.join(directory, "a_sharp.csv"),
                         stride)
        write_tensor_csv(self.a_natural.tensor(self.lattice), self.lattice,
                         os.path.join(directory, "a_natural.csv"), stride)
        with open(os.path.join(directory, "split_manifest.json"), "w") as fh:
            fh.write(dumps(self.manifest()) + "\n")


class _Zero(Multiplier):
    def __init__(self):
        super().__init__(fn=lambda xi: np.zeros(np.shape(xi)[:-1]), name="zero")


def taylor_split(a, delta, part, r, p):
    """a_sharp = sum_h [phi(2^(-h delta / M) D_x) a](x, xi) phi_h(xi), a_natural = a - a_sharp."""
    M = part.M
    lat = part.lattice
    if not M.integer_flag:
        raise ValueError("integer weights are required")
    if not 0 < delta <= 1:
        raise ValueError("delta must lie in (0, 1]")
    kap = exact_kappa(r, p, lat.n, M)
    common = dict(delta=delta, kappa=kap, r=r, p=p, M=M, K=part.K, lattice=lat, source=a)
    if not a.x_dependent:
        return SplitResult(a_sharp=a, a_natural=_Zero(), **common)
    if isinstance(a, Separable):
        sharp, natural = [], []
        grid = lat.freq_grid()
        for d, g in a.terms:
            if np.all(d == d.flat[0]):
                sharp.append((d, g))
                continue
            prof = g(grid.astype(float)) if callable(g) else np.asarray(g)
            for h in part.shells:
                ph = part.phi(h)
                if not np.any(ph):
                    continue
                dm = mollify(d, lat, M, 2.0 ** (-h * delta))
                sharp.append((dm, prof * ph))
                natural.append((d - dm, prof * ph))
        return SplitResult(a_sharp=Separable(lat, sharp, name="a_sharp"),
                           a_natural=Separable(lat, natural, name="a_natural"), **common)
    vals = a.tensor(lat)
    n = lat.n
    fx = np.fft.fftn(vals, axes=tuple(range(n)))
    eta = lat.freq_grid()
    mult = np.zeros(lat.shape + lat.shape)
    for h in part.shells:
        ph = part.phi(h)
        if not np.any(ph):
            continue
        s = smoothing_values(M, 2.0 ** (-h * delta), eta)
        mult += s[(...,) + (None,) * n] * ph[(None,) * n]
    sharp = np.fft.ifftn(fx * mult, axes=tuple(range(n)))
    return SplitResult(a_sharp=GridTensor(lat, sharp), a_natural=GridTensor(lat, vals - sharp), **common)


def verify_split_classes(res, m, max_orders=(2, 2), N=1, xi_points=None):
    """Kappa-class constants of a_sharp and FL-class constants of a_natural at order m - delta kappa."""
    lat = res.lattice
    kf = float(res.kappa)
    sharp = estimate_kappa_class(res.a_sharp, lat, m, res.delta, res.kappa, res.M, max_orders, xi_points)
    reduced = m - res.delta * kf
    if res.a_natural.x_dependent and not isinstance(res.a_natural, _Zero):
        natural = estimate_fl_class(res.a_natural, lat, reduced, float(res.r), res.p, res.delta, res.M, N, xi_points)
    else:
        natural = None
    return {"a_sharp": sharp, "a_natural": natural, "reduced_order": reduced}
