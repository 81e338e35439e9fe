"""Truncated symbol composition, reciprocal symbols and Neumann-series parametrices."""
import itertools
import math

import numpy as np

from .dyadic import Transition, build_partition
from .flnorm import FLParams, fl_norm
from .lattice import random_band_limited
from .mweight import as_anisotropy, m_weight
from .quantize import dense_matrix, kohn_nirenberg_apply
from .symbol import (
    FunctionOfSymbol,
    Symbol,
    derivative_slices,
    identity_symbol,
    is_m_elliptic,
    multi_indices,
)


def _newton_stencil(k, forward):
    """Offsets and weights of the k-th forward (or backward) unit difference."""
    if forward:
        return {j: math.comb(k, j) * (-1) ** (k - j) for j in range(k + 1)}
    return {-j: math.comb(k, j) * (-1) ** j for j in range(k + 1)}


def _factorial_multiplier(eta, k, forward):
    """eta (eta-1) ... (eta-k+1) / k! on eta >= 0, eta (eta+1) ... (eta+k-1) / k! on eta < 0."""
    out = np.ones_like(eta, dtype=float)
    step = -1.0 if forward else 1.0
    for i in range(k):
        out = out * (eta + step * i)
    mask = eta >= 0 if forward else eta < 0
    return np.where(mask, out / math.factorial(k), 0.0)


class Composition(Symbol):
    """Truncated composition symbol of a(x,D) b(x,D), orders |alpha| < N.

    ``calculus='taylor'``: sum (-i)^|alpha| / alpha! d_xi^alpha a d_x^alpha b.
    ``calculus='lattice'``: the unit-step analogue, where the x-harmonic eta of b
    is paired with forward differences of a (eta >= 0) or backward differences
    (eta < 0) and falling/rising factorials of eta, with xi shifts wrapped
    into the box.  It reproduces the exact lattice composition for harmonics
    |eta| < N."""

    kind = "composition"

    def __init__(self, a, b, N, calculus="lattice"):
        if not 1 <= N <= 4:
            raise ValueError("truncation order must lie in 1..4")
        if calculus not in ("taylor", "lattice"):
            raise ValueError(f"unknown calculus {calculus!r}")
        self.a = a
        self.b = b
        self.N = int(N)
        self.calculus = calculus
        self.x_dependent = a.x_dependent or b.x_dependent
        self._memo = {}

    def slices(self, lat, xi):
        xi = np.asarray(xi, dtype=float)
        key = (lat, xi.tobytes())
        hit = self._memo.get(key)
        if hit is not None:
            return hit
        if not self.b.x_dependent:
            out = self.a.slices(lat, xi) * self.b.slices(lat, xi)
        elif self.calculus == "taylor":
            out = self._taylor(lat, xi)
        else:
            out = self._lattice(lat, xi)
        if len(self._memo) > 4096:
            self._memo.clear()
        self._memo[key] = out
        return out

    def _taylor(self, lat, xi):
        n = lat.n
        out = 0
        for al in multi_indices(n, self.N - 1):
            coef = (-1j) ** sum(al) / math.prod(math.factorial(v) for v in al)
            da = derivative_slices(self.a, lat, xi, al, (0,) * n)
            db = derivative_slices(self.b, lat, xi, (0,) * n, al)
            out = out + coef * da * db
        return out

    def _lattice(self, lat, xi):
        n = lat.n
        axes = tuple(range(1, n + 1))
        bhat = np.fft.fftn(self.b.slices(lat, xi), axes=axes)
        eta = [k.astype(float) for k in lat.freq_axes()]
        shifted = {}

        half = np.asarray(lat.sizes, dtype=float) / 2
        period = np.asarray(lat.sizes, dtype=float)

        def a_at(off):
            # the lattice operator sees a only on the box, so shifts wrap around the torus
            if off not in shifted:
                pts = np.mod(xi + np.asarray(off, dtype=float) + half, period) - half
                shifted[off] = self.a.slices(lat, pts)
            return shifted[off]

        out = 0
        for al in multi_indices(n, self.N - 1):
            for signs in itertools.product((True, False), repeat=n):
                mult = np.ones(lat.shape)
                for j in range(n):
                    shape = [1] * n
                    shape[j] = -1
                    mult = mult * _factorial_multiplier(eta[j], al[j], signs[j]).reshape(shape)
                if not np.any(mult):
                    continue
                db = np.fft.ifftn(bhat * mult[None], axes=axes)
                da = 0
                stencils = [_newton_stencil(al[j], signs[j]).items() for j in range(n)]
                for combo in itertools.product(*stencils):
                    off = tuple(o for o, _ in combo)
                    da = da + math.prod(c for _, c in combo) * a_at(off)
                out = out + da * db
        return out


def compose_asymptotic(a, b, N, M=None, calculus="lattice"):
    return Composition(a, b, N, calculus)


class _Affine(Symbol):
    """c0 + c1 * a."""

    kind = "affine"

    def __init__(self, c0, c1, a):
        self.c0, self.c1, self.a = c0, c1, a
        self.x_dependent = a.x_dependent

    def slices(self, lat, xi):
        return self.c0 + self.c1 * self.a.slices(lat, xi)


class _Sum(Symbol):
    kind = "sum"

    def __init__(self, parts):
        self.parts = parts
        self.x_dependent = any(p.x_dependent for p in parts)

    def slices(self, lat, xi):
        return sum(p.slices(lat, xi) for p in self.parts)


def smooth_inverse(z, c0):
    """F(z) = 1/z for |z| >= c0, conj(z)/c0^2 for |z| <= c0/2, radially blended between."""
    z = np.asarray(z, dtype=complex)
    r = np.abs(z)
    blend = Transition(c0 / 2.0, c0)(r)
    inv = np.divide(1.0, z, out=np.zeros_like(z), where=r > 0)
    return blend * np.conj(z) / c0**2 + (1.0 - blend) * inv


def reciprocal_symbol(a, m, c0, M):
    """b0 = <xi>^-m F(<xi>^-m a)."""
    M = as_anisotropy(M)
    if not c0 > 0:
        raise ValueError("c0 must be positive")

    def g(lat, xi, vals):
        w = (m_weight(M, xi) ** (-m))[(...,) + (None,) * lat.n]
        return w * smooth_inverse(w * vals, c0)

    return FunctionOfSymbol(a, g)


def neumann_parametrix(a, lat, m, N_terms, delta, M, c0, R, check=True, side="right", calculus="lattice",
                      order=None):
    """b = b0 # sum_{j < N_terms} rho_j with rho_1 = 1 - a # b0 and rho_j = rho_1 # rho_{j-1}.

    All compositions are truncated at order N_terms.  ``side='left'`` builds
    (sum rho_j) # b0 from rho_1 = 1 - b0 # a instead."""
    M = as_anisotropy(M)
    if not 1 <= N_terms <= 4:
        raise ValueError("N_terms must lie in 1..4")
    if not 0 <= delta < float(M.min_order / M.max_order):
        raise ValueError("delta must satisfy 0 <= delta < mu_min/mu_max")
    if check:
        ok, witness = is_m_elliptic(a, lat, m, c0, R, M)
        if not ok:
            raise ValueError(f"symbol is not M-elliptic with c0={c0}, R={R}: {witness}")
    N = N_terms if order is None else int(order)
    b0 = reciprocal_symbol(a, m, c0, M)
    if N_terms == 1:
        return b0
    if side == "right":
        rho1 = _Affine(1.0, -1.0, Composition(a, b0, N, calculus))
    else:
        rho1 = _Affine(1.0, -1.0, Composition(b0, a, N, calculus))
    powers = [identity_symbol(), rho1]
    for _ in range(2, N_terms):
        prev = powers[-1]
        powers.append(Composition(rho1, prev, N, calculus) if side == "right"
                      else Composition(prev, rho1, N, calculus))
    series = _Sum(powers)
    if side == "right":
        return Composition(b0, series, N, calculus)
    return Composition(series, b0, N, calculus)


def residual_symbol_per_shell(a, b, lat, N, M, K=2.0, calculus="lattice"):
    """sup over each shell of |(a # b)(x, xi) - 1| with composition truncated at N."""
    part = build_partition(lat, M, K)
    comp = Composition(a, b, N, calculus)
    xi = lat.freq_grid().reshape(-1, lat.n).astype(float)
    vals = np.concatenate([np.abs(comp.slices(lat, xi[i:i + 64]) - 1.0).reshape(len(xi[i:i + 64]), -1).max(axis=1)
                           for i in range(0, len(xi), 64)])
    out = {}
    for h in part.shells:
        mask = part.phi(h).reshape(-1) != 0
        out[h] = float(vals[mask].max()) if mask.any() else 0.0
    return out


def dense_residual(a, b, lat):
    """Spectral norm of A B - I for the dense frequency-basis matrices."""
    A = dense_matrix(a, lat)
    B = dense_matrix(b, lat)
    return float(np.linalg.norm(A @ B - np.eye(A.shape[0]), 2))


def residual_norm(a, b, lat, s, p, M, trials=16, seed=0, gain=1.0, modes=8):
    """Probe of a(x,D) b(x,D) - I from FL^p_s into FL^p_{s+gain}."""
    M = as_anisotropy(M)
    rng = np.random.default_rng(seed)
    best = 0.0
    for _ in range(trials):
        u = random_band_limited(lat, rng, modes=modes)
        v = kohn_nirenberg_apply(a, kohn_nirenberg_apply(b, u)) - u
        best = max(best, fl_norm(v, FLParams(s + gain, p, M)) / fl_norm(u, FLParams(s, p, M)))
    return best


class _Extended(Symbol):
    """a + C (1 - chi) <xi>^m with chi(x, xi) = cutoff(x) psi(xi).

    C exceeds twice the sampled sup of |a| / <xi>^m, so the sum cannot cancel
    where chi = 0."""

    kind = "extended"

    def __init__(self, a, cutoff, psi_fn, m, M, gain=1.0):
        self.a, self.cutoff, self.psi_fn, self.m, self.M = a, cutoff, psi_fn, m, M
        self.gain = float(gain)
        self.x_dependent = True

    def chi(self, lat, xi):
        return self.psi_fn(xi)[(...,) + (None,) * lat.n] * self.cutoff[None]

    def slices(self, lat, xi):
        xi = np.asarray(xi, dtype=float)
        w = (m_weight(self.M, xi) ** self.m)[(...,) + (None,) * lat.n]
        return self.a.slices(lat, xi) + self.gain * (1.0 - self.chi(lat, xi)) * w


def symbol_sup_ratio(a, lat, m, M, chunk=64):
    """max over the lattice of |a(x, xi)| / <xi>_M^m."""
    xi = lat.freq_grid().reshape(-1, lat.n).astype(float)
    best = 0.0
    for i in range(0, len(xi), chunk):
        s = xi[i:i + chunk]
        vals = np.abs(a.slices(lat, s)).reshape(len(s), -1).max(axis=1)
        best = max(best, float(np.max(vals / m_weight(M, s) ** m)))
    return best


def microlocal_parametrix(a, lat, m, sector, x_cutoff, N_terms, M, c0=None, R=None, delta=0.0,
                          extension=False, calculus="lattice"):
    """Parametrix of a on a conic sector times the support of an x-cutoff.

    Ellipticity is checked on (cutoff > 0) x (sector symbol > 0).  By default
    the Neumann construction runs on a itself: the smoothed reciprocal is
    defined everywhere, so ellipticity is only needed where the residual is
    measured.  With ``extension=True`` a non-elliptic a is first replaced by
    a + C (1 - chi) <xi>_M^m with chi = cutoff(x) psi(xi) and
    C = 1 + 2 sup |a| / <xi>_M^m."""
    from .microlocal import sector_values

    M = as_anisotropy(M)
    cutoff = np.real(np.asarray(x_cutoff.phys() if hasattr(x_cutoff, "phys") else x_cutoff))
    c0 = 0.5 if c0 is None else c0
    R = sector.eps0 if R is None else R
    psi_grid = sector_values(sector, M, lat.freq_grid())
    ok, witness = is_m_elliptic(a, lat, m, c0, R, M, xi_mask=psi_grid > 0, x_mask=cutoff > 0)
    if not ok:
        raise ValueError(f"symbol is not microlocally M-elliptic on the sector: {witness}")
    globally = not extension or is_m_elliptic(a, lat, m, c0, R, M)[0]
    if globally:
        target = a
    else:
        target = _Extended(a, cutoff, lambda xi: sector_values(sector, M, xi), m, M,
                           gain=1.0 + 2.0 * symbol_sup_ratio(a, lat, m, M))
    b = neumann_parametrix(target, lat, m, N_terms, delta, M, c0, R, check=False, calculus=calculus)
    b.extended_symbol = target
    return b


def parametrix_manifest(m, N_terms, c0, R, residual_per_shell, lat):
    return {
        "m": m,
        "N_terms": N_terms,
        "c0": c0,
        "R": R,
        "residual_per_shell": {str(k): v for k, v in residual_per_shell.items()},
        "lattice": lat.label(),
    }
