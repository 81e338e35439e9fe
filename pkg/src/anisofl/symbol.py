"""Symbol representations and numerical class-membership estimators.

Every symbol exposes ``slices(lat, xi)``: for a stack of frequencies ``xi``
(shape (P, n)) it returns a(x, xi_p) on the whole physical grid, shape
(P, *lat.shape).  Everything else (derivatives, norms, quantization) is
built on that one primitive.
"""
import csv
import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .flnorm import conjugate, lp
from .lattice import GridFunction, as_lattice, fft_x
from .mweight import anis_dilate, as_anisotropy, m_norm, m_order, m_weight, unit_directions

CHUNK = 64


def _grid_lookup(values, lat, xi):
    return values[lat.freq_index(xi)]


def _profile(g, lat, xi):
    """Evaluate a frequency profile given as a callable or as lattice values."""
    if callable(g):
        return np.asarray(g(np.asarray(xi, dtype=float)), dtype=complex)
    return np.asarray(_grid_lookup(np.asarray(g), lat, xi), dtype=complex)


def _bcast(vals, lat):
    return np.asarray(vals)[(...,) + (None,) * lat.n]


class Symbol:
    kind = "symbol"
    x_dependent = True
    oracle = None

    def slices(self, lat, xi):
        raise NotImplementedError

    def tensor(self, lat, budget=2**24):
        """Full array a[x..., xi...] for small lattices."""
        lat = as_lattice(lat)
        if lat.count**2 > budget:
            raise MemoryError("symbol tensor exceeds the configured budget")
        xi = lat.freq_grid().reshape(-1, lat.n)
        vals = np.concatenate([self.slices(lat, xi[i:i + CHUNK])
                               for i in range(0, len(xi), CHUNK)])
        vals = vals.reshape(lat.shape + lat.shape)
        n = lat.n
        return np.moveaxis(vals, list(range(n)), list(range(n, 2 * n)))

    def __add__(self, other):
        return SumSymbol([self, other])

    def __sub__(self, other):
        return SumSymbol([self, ScaledSymbol(-1.0, other)])

    def __rmul__(self, c):
        return ScaledSymbol(c, self)


class Multiplier(Symbol):
    """x-independent symbol a(xi), from a callable or from lattice values."""

    kind = "multiplier"
    x_dependent = False

    def __init__(self, fn=None, values=None, lattice=None, name="multiplier"):
        if (fn is None) == (values is None):
            raise ValueError("give exactly one of fn or values")
        self.fn = fn
        self.values = None if values is None else np.asarray(values, dtype=complex)
        self.lattice = None if lattice is None else as_lattice(lattice)
        self.name = name

    def on(self, lat):
        lat = as_lattice(lat)
        if self.values is not None:
            if self.lattice is not None and self.lattice != lat:
                raise ValueError("multiplier values belong to another lattice")
            return self.values
        return np.asarray(self.fn(lat.freq_grid().astype(float)), dtype=complex)

    def at(self, lat, xi):
        if self.fn is not None:
            return np.asarray(self.fn(np.asarray(xi, dtype=float)), dtype=complex)
        return _grid_lookup(self.values, lat, xi)

    def slices(self, lat, xi):
        v = self.at(lat, xi)
        return np.broadcast_to(_bcast(v, lat), (len(v),) + lat.shape)


class XMultiplier(Symbol):
    kind = "xmultiplier"

    def __init__(self, d):
        if isinstance(d, GridFunction):
            self.lattice = d.lattice
            d = d.phys()
        else:
            raise TypeError("XMultiplier expects a GridFunction")
        self.d = np.asarray(d, dtype=complex)

    def slices(self, lat, xi):
        _check(self.lattice, lat)
        return np.broadcast_to(self.d, (len(xi),) + lat.shape)


class Separable(Symbol):
    """Finite sum of products d_t(x) g_t(xi)."""

    kind = "separable"

    def __init__(self, lattice, terms, name="separable"):
        self.lattice = as_lattice(lattice)
        self.terms = []
        for d, g in terms:
            if isinstance(d, GridFunction):
                d = d.phys()
            d = np.broadcast_to(np.asarray(d, dtype=complex), self.lattice.shape)
            self.terms.append((d, g))
        self.name = name

    def slices(self, lat, xi):
        _check(self.lattice, lat)
        out = np.zeros((len(xi),) + lat.shape, dtype=complex)
        for d, g in self.terms:
            out += _bcast(_profile(g, lat, xi), lat) * d
        return out

    def profile_grid(self, t, lat=None):
        d, g = self.terms[t]
        lat = lat or self.lattice
        return _profile(g, lat, lat.freq_grid())

    def _dx(self, t, beta):
        key = (t, beta)
        cache = self.__dict__.setdefault("_dx_cache", {})
        if key not in cache:
            d = self.terms[t][0]
            if any(beta) and np.all(d == d.flat[0]):
                cache[key] = None
            else:
                cache[key] = x_derivative(d[None], self.lattice, beta)[0]
        return cache[key]

    def derivative_slices(self, lat, xi, alpha, beta):
        """Termwise: (d_x^beta d_t)(x) (d_xi^alpha g_t)(xi), skipping inactive terms."""
        _check(self.lattice, lat)
        xi = np.asarray(xi, dtype=float)
        out = np.zeros((len(xi),) + lat.shape, dtype=complex)
        sten = xi_stencil(alpha)
        for t, (d, g) in enumerate(self.terms):
            prof = sum(c * _profile(g, lat, xi + np.asarray(off, dtype=float))
                       for off, c in sten.items())
            if not np.any(prof):
                continue
            dd = self._dx(t, tuple(beta))
            if dd is None:
                continue
            out += _bcast(prof, lat) * dd
        return out


class Elementary(Separable):
    """sum_h d_h(x) psi_h(xi) with psi_h supported in the dyadic shell h."""

    kind = "elementary"

    def __init__(self, lattice, terms, shells, K, name="elementary"):
        super().__init__(lattice, terms, name=name)
        self.shells = list(shells)
        self.K = float(K)
        if len(self.shells) != len(self.terms):
            raise ValueError("one shell index per term is required")

    def support_violations(self, M):
        from .dyadic import shell_bounds

        r = m_norm(M, self.lattice.freq_grid())
        bad = 0
        for (d, g), h in zip(self.terms, self.shells):
            lo, hi = shell_bounds(h, self.K)
            psi = _profile(g, self.lattice, self.lattice.freq_grid())
            bad += int(np.count_nonzero((psi != 0) & ((r < lo) | (r > hi))))
        return bad


class GridTensor(Symbol):
    kind = "grid"

    def __init__(self, lattice, values):
        self.lattice = as_lattice(lattice)
        if self.lattice.n > 2:
            raise ValueError("grid symbols are limited to n <= 2")
        v = np.asarray(values, dtype=complex)
        if v.shape != self.lattice.shape * 2:
            raise ValueError("grid symbol shape must be (*sizes, *sizes)")
        self.values = v

    def slices(self, lat, xi):
        _check(self.lattice, lat)
        idx = lat.freq_index(xi)
        n = lat.n
        moved = np.moveaxis(self.values, list(range(n, 2 * n)), list(range(n)))
        return moved[idx]


class Callable(Symbol):
    """a(x, xi) given by a vectorized function of x (..., n) and xi (..., n).

    ``oracle(x, xi, alpha, beta)`` may supply exact derivatives."""

    kind = "callable"

    def __init__(self, fn, lattice=None, oracle=None, x_dependent=True, name="callable"):
        self.fn = fn
        self.lattice = None if lattice is None else as_lattice(lattice)
        self.oracle = oracle
        self.x_dependent = x_dependent
        self.name = name

    def slices(self, lat, xi):
        _check(self.lattice, lat)
        x = lat.x_grid()[None]
        xi = np.asarray(xi, dtype=float)[(slice(None),) + (None,) * lat.n]
        out = np.asarray(self.fn(x, xi), dtype=complex)
        return np.broadcast_to(out, (xi.shape[0],) + lat.shape)

    def derivative_slices(self, lat, xi, alpha, beta):
        x = lat.x_grid()[None]
        xi = np.asarray(xi, dtype=float)[(slice(None),) + (None,) * lat.n]
        out = np.asarray(self.oracle(x, xi, tuple(alpha), tuple(beta)), dtype=complex)
        return np.broadcast_to(out, (xi.shape[0],) + lat.shape)


class SumSymbol(Symbol):
    kind = "sum"

    def __init__(self, parts):
        self.parts = list(parts)
        self.x_dependent = any(p.x_dependent for p in self.parts)

    def slices(self, lat, xi):
        return sum(p.slices(lat, xi) for p in self.parts)


class ScaledSymbol(Symbol):
    kind = "scaled"

    def __init__(self, c, a):
        self.c = c
        self.a = a
        self.x_dependent = a.x_dependent

    def slices(self, lat, xi):
        return self.c * self.a.slices(lat, xi)


class FunctionOfSymbol(Symbol):
    """Pointwise g(x, xi, a(x, xi)) of another symbol."""

    kind = "derived"

    def __init__(self, a, g, x_dependent=None):
        self.a = a
        self.g = g
        self.x_dependent = a.x_dependent if x_dependent is None else x_dependent

    def slices(self, lat, xi):
        return self.g(lat, np.asarray(xi, dtype=float), self.a.slices(lat, xi))


def _check(own, lat):
    if own is not None and own != lat:
        raise ValueError(f"symbol lives on {own.label()}, asked for {lat.label()}")


def identity_symbol():
    return Multiplier(fn=lambda xi: np.ones(xi.shape[:-1]), name="identity")


def weight_symbol(M, m=1.0):
    M = as_anisotropy(M)
    return Multiplier(fn=lambda xi: m_weight(M, xi) ** m, name=f"weight^{m}")


# derivatives

_STENCILS = {
    0: {0: 1.0},
    1: {1: 0.5, -1: -0.5},
    2: {1: 1.0, 0: -2.0, -1: 1.0},
    3: {2: 0.5, 1: -1.0, -1: 1.0, -2: -0.5},
    4: {2: 1.0, 1: -4.0, 0: 6.0, -1: -4.0, -2: 1.0},
}


def xi_stencil(alpha):
    """Central lattice-step difference stencil for d^alpha/dxi^alpha."""
    out = {}
    for combo in itertools.product(*[_STENCILS[int(a)].items() for a in alpha]):
        off = tuple(o for o, _ in combo)
        out[off] = out.get(off, 0.0) + math.prod(c for _, c in combo)
    return out


def x_derivative(slabs, lat, beta):
    """Spectral d^beta/dx^beta of slices with shape (P, *lat.shape)."""
    if not any(beta):
        return slabs
    n = lat.n
    f = np.fft.fftn(slabs, axes=tuple(range(1, n + 1)))
    mult = np.ones(lat.shape, dtype=complex)
    for j, (k, b) in enumerate(zip(lat.freq_axes(), beta)):
        shape = [1] * n
        shape[j] = -1
        mult = mult * ((1j * k.astype(float)) ** int(b)).reshape(shape)
    return np.fft.ifftn(f * mult, axes=tuple(range(1, n + 1)))


def derivative_slices(a, lat, xi, alpha, beta):
    """d_xi^alpha d_x^beta a at the frequencies xi, on the whole x grid."""
    alpha = tuple(int(v) for v in alpha)
    beta = tuple(int(v) for v in beta)
    if a.oracle is not None or isinstance(a, Separable):
        return a.derivative_slices(lat, xi, alpha, beta)
    xi = np.asarray(xi, dtype=float)
    if not a.x_dependent and any(beta):
        return np.zeros((len(xi),) + lat.shape, dtype=complex)
    acc = None
    for off, c in xi_stencil(alpha).items():
        term = c * a.slices(lat, xi + np.asarray(off, dtype=float))
        acc = term if acc is None else acc + term
    return x_derivative(acc, lat, beta)


def multi_indices(n, max_order):
    return [t for t in itertools.product(range(max_order + 1), repeat=n) if sum(t) <= max_order]


def _interior_points(lat, margin=2, M=None):
    """Lattice frequencies at least ``margin`` steps inside the box, ordered by
    |xi|_M so that chunks stay shell-local."""
    xi = lat.freq_grid().reshape(-1, lat.n)
    ok = np.ones(len(xi), dtype=bool)
    for j, N in enumerate(lat.sizes):
        ok &= np.abs(xi[:, j]) <= N // 2 - 1 - margin
    xi = xi[ok]
    key = m_norm(M, xi) if M is not None else np.sum(xi.astype(float) ** 2, axis=1)
    return xi[np.argsort(key, kind="stable")]


# class reports

@dataclass
class ClassReport:
    m: float
    delta: float
    kappa: object = None
    constants: dict = field(default_factory=dict)
    inner_constants: dict = field(default_factory=dict)
    growth_flags: dict = field(default_factory=dict)
    kind: str = "smooth"
    samples: int = 0

    def max_constant(self):
        return max(self.constants.values()) if self.constants else 0.0

    def all_finite(self):
        return all(np.isfinite(v) for v in self.constants.values())

    def to_dict(self):
        def key(k):
            return ";".join("".join(str(i) for i in part) for part in k) if isinstance(k[0], tuple) else str(k)
        return {
            "kind": self.kind,
            "m": self.m,
            "delta": self.delta,
            "kappa": None if self.kappa is None else str(self.kappa),
            "samples": self.samples,
            "constants": {key(k): v for k, v in self.constants.items()},
            "growth_flags": {key(k): v for k, v in self.growth_flags.items()},
        }


def _pairs(n, max_orders, has_oracle):
    ma, mb = max_orders
    out = []
    for al in multi_indices(n, ma):
        for be in multi_indices(n, mb):
            if sum(al) + sum(be) > 4 and not has_oracle:
                continue
            out.append((al, be))
    return out


def _measure(a, lat, M, pairs, bound, xi_points):
    """sup over x and the sample frequencies of |derivative| / bound, plus the
    same sup restricted to the inner half of the sampled box."""
    w_all = m_weight(M, xi_points)
    lim = np.array([N // 4 for N in lat.sizes])
    inner_mask = np.all(np.abs(xi_points) <= lim, axis=1)
    full = {k: 0.0 for k in pairs}
    inner = {k: 0.0 for k in pairs}
    by_alpha = {}
    for al, be in pairs:
        by_alpha.setdefault(al, []).append(be)
    for i in range(0, len(xi_points), CHUNK):
        xi = xi_points[i:i + CHUNK].astype(float)
        w = w_all[i:i + CHUNK]
        inn = inner_mask[i:i + CHUNK]
        direct = a.oracle is not None or isinstance(a, Separable)
        for al, betas in by_alpha.items():
            if not direct:
                base = derivative_slices(a, lat, xi, al, (0,) * lat.n)
            for be in betas:
                if not direct:
                    d = x_derivative(base, lat, be) if (a.x_dependent or not any(be)) else 0 * base
                else:
                    d = derivative_slices(a, lat, xi, al, be)
                mag = np.abs(d).reshape(len(xi), -1).max(axis=1)
                ratio = mag / bound(w, al, be)
                full[(al, be)] = max(full[(al, be)], float(ratio.max()))
                if inn.any():
                    inner[(al, be)] = max(inner[(al, be)], float(ratio[inn].max()))
    return full, inner


def _report(kind, m, delta, kappa, full, inner, samples):
    flags = {k: bool(full[k] > 1.5 * inner[k] and full[k] > 1e-12) for k in full}
    return ClassReport(m=m, delta=delta, kappa=kappa, constants=full, inner_constants=inner,
                       growth_flags=flags, kind=kind, samples=samples)


def estimate_smooth_class(a, lat, m, delta, M, max_orders=(2, 2), xi_points=None):
    """Constants C_ab = sup |d_xi^a d_x^b a| / <xi>^(m - <a,1/M> + delta <b,1/M>)."""
    lat = as_lattice(lat)
    M = as_anisotropy(M)
    pts = _interior_points(lat, M=M) if xi_points is None else np.asarray(xi_points)
    pairs = _pairs(lat.n, max_orders, a.oracle is not None)

    def bound(w, al, be):
        return w ** (m - float(m_order(M, al)) + delta * float(m_order(M, be)))

    full, inner = _measure(a, lat, M, pairs, bound, pts)
    return _report("smooth", m, delta, None, full, inner, len(pts))


def kappa_stratum(M, beta, kappa):
    """-1, 0, 1 as <beta,1/M> is below, equal to, above kappa (exact comparison)."""
    k = kappa if isinstance(kappa, Fraction) else Fraction(kappa)
    o = m_order(M, beta)
    return (o > k) - (o < k)


def estimate_kappa_class(a, lat, m, delta, kappa, M, max_orders=(2, 2), xi_points=None):
    """Constants against <xi>^(m - <a> + delta (<b> - kappa)_+), with the
    logarithmic bound <xi>^(m - <a>) log(1 + <xi>^delta) on <b,1/M> = kappa."""
    lat = as_lattice(lat)
    M = as_anisotropy(M)
    if not kappa > 0:
        raise ValueError("kappa must be positive")
    pts = _interior_points(lat, M=M) if xi_points is None else np.asarray(xi_points)
    pairs = _pairs(lat.n, max_orders, a.oracle is not None)
    kf = float(kappa)

    def bound(w, al, be):
        base = w ** (m - float(m_order(M, al)))
        if kappa_stratum(M, be, kappa) == 0:
            return base * np.log1p(w**delta)
        return base * w ** (delta * max(float(m_order(M, be)) - kf, 0.0))

    full, inner = _measure(a, lat, M, pairs, bound, pts)
    return _report("kappa", m, delta, kappa, full, inner, len(pts))


def estimate_fl_class(a, lat, m, r, p, delta, M, N=1, xi_points=None):
    """Constants of ||d_xi^a a(., xi)||_FL1 / <xi>^(m-<a>) and of
    ||d_xi^a a(., xi)||_FL^p_r / <xi>^(m - <a> + delta (r - n/(mu_min q)))."""
    lat = as_lattice(lat)
    M = as_anisotropy(M)
    if not a.x_dependent:
        raise ValueError("x-independent symbols have trivial x-norms; use estimate_smooth_class")
    pts = _interior_points(lat, M=M) if xi_points is None else np.asarray(xi_points)
    q = conjugate(p)
    kap = r - (lat.n / (float(M.min_order) * q) if not math.isinf(q) else 0.0)
    wx = m_weight(M, lat.freq_grid()) ** r
    full, inner = {}, {}
    w_all = m_weight(M, pts)
    lim = np.array([Nn // 4 for Nn in lat.sizes])
    inner_mask = np.all(np.abs(pts) <= lim, axis=1)
    for al in multi_indices(lat.n, N):
        order = float(m_order(M, al))
        for key in (("FL1", al), ("FLpr", al)):
            full[key] = 0.0
            inner[key] = 0.0
        for i in range(0, len(pts), CHUNK):
            xi = pts[i:i + CHUNK].astype(float)
            w = w_all[i:i + CHUNK]
            inn = inner_mask[i:i + CHUNK]
            d = derivative_slices(a, lat, xi, al, (0,) * lat.n)
            c = np.abs(fft_x(np.moveaxis(d, 0, -1), lat.n))
            c = np.moveaxis(c, -1, 0).reshape(len(xi), -1)
            l1 = c.sum(axis=1)
            if math.isinf(p):
                lpr = (c * wx.reshape(1, -1)).max(axis=1)
            else:
                lpr = np.array([lp(row * wx.reshape(-1), p) for row in c])
            r1 = l1 / w ** (m - order)
            r2 = lpr / w ** (m - order + delta * kap)
            for key, rr in ((("FL1", al), r1), (("FLpr", al), r2)):
                full[key] = max(full[key], float(rr.max()))
                if inn.any():
                    inner[key] = max(inner[key], float(rr[inn].max()))
    rep = _report("fourier-lebesgue", m, delta, None, full, inner, len(pts))
    return rep


# ellipticity and characteristic sets

def is_m_elliptic(a, lat, m, c0, R, M, xi_mask=None, x_mask=None):
    """Check |a(x,xi)| >= c0 <xi>_M^m for sampled |xi|_M >= R; returns (ok, witness)."""
    lat = as_lattice(lat)
    M = as_anisotropy(M)
    if c0 <= 0:
        raise ValueError("c0 must be positive")
    xi_all = lat.freq_grid().reshape(-1, lat.n)
    keep = m_norm(M, xi_all) >= R
    if xi_mask is not None:
        keep &= np.asarray(xi_mask).reshape(-1)
    pts = xi_all[keep]
    xm = None if x_mask is None else np.asarray(x_mask).reshape(-1)
    best = (math.inf, None, None)
    for i in range(0, len(pts), CHUNK):
        xi = pts[i:i + CHUNK].astype(float)
        vals = np.abs(a.slices(lat, xi)).reshape(len(xi), -1)
        ratio = vals / (m_weight(M, xi) ** m)[:, None]
        if xm is not None:
            ratio = np.where(xm[None, :], ratio, math.inf)
        k = int(np.argmin(ratio))
        pi, xj = divmod(k, ratio.shape[1])
        if ratio[pi, xj] < best[0]:
            best = (float(ratio[pi, xj]), xi[pi], np.unravel_index(xj, lat.shape))
    if best[1] is None:
        return True, None
    witness = {
        "ratio": best[0],
        "xi": [float(v) for v in best[1]],
        "x_index": [int(v) for v in best[2]],
        "x": [float(2 * np.pi * i / N) for i, N in zip(best[2], lat.sizes)],
    }
    return bool(best[0] >= c0), witness


@dataclass
class CharSet:
    x_indices: list
    directions: np.ndarray
    minima: np.ndarray
    threshold: float

    @property
    def flags(self):
        return self.minima <= self.threshold

    def flagged(self):
        ii, dd = np.nonzero(self.flags)
        return {(tuple(self.x_indices[i]), int(d)) for i, d in zip(ii, dd)}

    def write_csv(self, path, lat):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow([f"x{j}" for j in range(lat.n)] + [f"w{j}" for j in range(lat.n)]
                       + ["min_normalized_modulus", "characteristic"])
            for i, xi in enumerate(self.x_indices):
                x = [2 * np.pi * k / N for k, N in zip(xi, lat.sizes)]
                for d, om in enumerate(self.directions):
                    w.writerow([format(v, ".17g") for v in x] + [format(v, ".17g") for v in om]
                               + [format(self.minima[i, d], ".17g"), int(self.flags[i, d])])


def char_set(a, lat, m, M, threshold=0.1, shell_range=range(3, 9), directions=64, x_indices=None):
    """Flag (x, direction) pairs where min over t = 2^h of |a(x, t^(1/M) w)| / <t^(1/M) w>^m
    is at most ``threshold``.  Directions sample the unit M-sphere."""
    lat = as_lattice(lat)
    M = as_anisotropy(M)
    if not 0 < threshold < 1:
        raise ValueError("threshold must lie in (0, 1)")
    dirs = unit_directions(M, directions) if np.ndim(directions) == 0 else np.asarray(directions, float)
    if x_indices is None:
        x_indices = [tuple(int(v) for v in k) for k in np.ndindex(*lat.shape)]
    x_indices = [tuple(int(v) for v in k) for k in x_indices]
    xsel = tuple(np.array([k[j] for k in x_indices]) for j in range(lat.n))
    minima = np.full((len(x_indices), len(dirs)), math.inf)
    for h in shell_range:
        xi = anis_dilate(M, 2.0**h, dirs)
        vals = a.slices(lat, xi)
        w = m_weight(M, xi) ** m
        sel = np.abs(vals[(slice(None),) + xsel]) / w[:, None]
        minima = np.minimum(minima, sel.T)
    return CharSet(x_indices, dirs, minima, float(threshold))


def elementary_from_grid(a, part):
    """Elementary symbol with psi_h = phi_h and d_h the x-slice of ``a`` at the
    frequency where phi_h peaks; returns (symbol, sup error on the lattice)."""
    lat = part.lattice
    if lat.n > 2:
        raise ValueError("grid symbols are limited to n <= 2")
    vals = a.tensor(lat) if not isinstance(a, GridTensor) else a.values
    n = lat.n
    terms, shells = [], []
    approx = np.zeros_like(vals)
    for h in part.shells:
        phi = part.phi(h)
        if not np.any(phi):
            continue
        k = np.unravel_index(int(np.argmax(phi)), lat.shape)
        d = vals[tuple([slice(None)] * n) + tuple(k)]
        terms.append((d, phi))
        shells.append(h)
        approx = approx + d[(...,) + (None,) * n] * phi[(None,) * n]
    err = float(np.max(np.abs(approx - vals)))
    return Elementary(lat, terms, shells, part.K), err
