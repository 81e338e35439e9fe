"""Anisotropic dyadic shells, the smooth partition of unity and dyadic blocks."""
import csv
import math
from functools import lru_cache

import numpy as np
from numpy.polynomial.legendre import leggauss
from scipy.integrate import cumulative_simpson
from scipy.interpolate import PchipInterpolator
from scipy.special import logsumexp

from .lattice import FREQUENCY, GridFunction, as_lattice
from .mweight import as_anisotropy, m_norm, m_order

QUADRATURE_POINTS = 2048


def _log_kernel(s):
    return -1.0 / (s * (1.0 - s))


@lru_cache(maxsize=1)
def _ramp_table():
    s = np.linspace(0.0, 1.0, QUADRATURE_POINTS + 1)
    k = np.zeros_like(s)
    k[1:-1] = np.exp(_log_kernel(s[1:-1]))
    c = cumulative_simpson(k, x=s, initial=0.0)
    c = c / c[-1]
    c[-1] = 1.0
    return PchipInterpolator(s, c, extrapolate=False), float(np.log(np.trapezoid(k, s)))


def ramp(s):
    """Normalized integral of exp(-1/(u(1-u))) from 0 to s, clipped to [0, 1]."""
    s = np.asarray(s, dtype=float)
    f, _ = _ramp_table()
    out = np.where(s <= 0, 0.0, np.where(s >= 1, 1.0, 0.0))
    mid = (s > 0) & (s < 1)
    if np.any(mid):
        out = out.copy()
        out[mid] = f(s[mid])
    return out


def log_ramp(s):
    """log of ramp(s) for 0 < s < 1, accurate where ramp underflows."""
    _, log_total = _ramp_table()
    nodes, weights = leggauss(64)
    s = float(s)
    u = 0.5 * s * (nodes + 1.0)
    return float(logsumexp(_log_kernel(u), b=0.5 * s * weights) - log_total)


class Transition:
    """Smooth nonincreasing profile equal to 1 on [0, lo] and 0 on [hi, inf)."""

    def __init__(self, lo, hi):
        if not 0 < lo < hi:
            raise ValueError("need 0 < lo < hi")
        self.lo = float(lo)
        self.hi = float(hi)

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        return 1.0 - ramp((t - self.lo) / (self.hi - self.lo))

    def log_deficit(self, t):
        """log(1 - profile(t)); -inf on the plateau."""
        s = (float(t) - self.lo) / (self.hi - self.lo)
        if s <= 0:
            return -math.inf
        if s >= 1:
            return 0.0
        return log_ramp(s)

    def __repr__(self):
        return f"Transition({self.lo!r}, {self.hi!r})"


class BumpProfile(Transition):
    """Profile with plateau up to 1/(2K) and support in [0, K]."""

    def __init__(self, K=2.0):
        K = float(K)
        if K < 1:
            raise ValueError("K must be at least 1")
        self.K = K
        super().__init__(1.0 / (2.0 * K), K)


def build_bump(K=2.0):
    return BumpProfile(K)


def overlap_bound(K):
    """Smallest N0 such that shells p, q with |p - q| > N0 are disjoint.

    Shells p < q meet iff K 2^(p+1) >= 2^(q-1)/K, i.e. q - p <= 2 + 2 log2 K."""
    K = float(K)
    if K < 1:
        raise ValueError("K must be at least 1")
    return int(math.floor(2.0 * math.log2(K) + 1e-12)) + 2


def shell_bounds(h, K):
    """(lower, upper) limits of |xi|_M on shell h; the lowest shell is a ball."""
    if h < 0:
        return 0.0, float(K)
    return 2.0 ** (h - 1) / K, K * 2.0 ** (h + 1)


class DyadicPartition:
    def __init__(self, lattice, M, K, profile, norms, phi):
        self.lattice = lattice
        self.M = M
        self.K = float(K)
        self.profile = profile
        self.norms = norms
        self._phi = phi
        self.h_max = phi.shape[0] - 2
        self.N0 = overlap_bound(K)

    @property
    def shells(self):
        return list(range(-1, self.h_max + 1))

    def phi(self, h):
        if h < -1 or h > self.h_max:
            return np.zeros(self.lattice.shape)
        return self._phi[h + 1]

    def stack(self):
        return self._phi

    def unity_error(self):
        return float(np.max(np.abs(self._phi.sum(axis=0) - 1.0)))

    def support_violations(self):
        bad = 0
        for h in self.shells:
            lo, hi = shell_bounds(h, self.K)
            nz = self.phi(h) != 0
            bad += int(np.count_nonzero(nz & ((self.norms < lo) | (self.norms > hi))))
        return bad

    def active_counts(self):
        return np.count_nonzero(self._phi != 0, axis=0)

    def overlap_violations(self):
        """Pairs of shells further apart than N0 that are both active at some point."""
        act = self._phi != 0
        bad = 0
        for i in range(act.shape[0]):
            for j in range(i + self.N0 + 1, act.shape[0]):
                bad += int(np.count_nonzero(act[i] & act[j]))
        return bad

    def weight_bound_violations(self):
        w = np.sqrt(1.0 + self.norms**2)
        bad = 0
        for h in self.shells:
            nz = self.phi(h) != 0
            if h < 0:
                lo, hi = 1.0, math.sqrt(1.0 + self.K**2)
            else:
                lo, hi = 2.0**h / (2 * self.K), math.sqrt(1 + 4 * self.K**2) * 2.0**h
            bad += int(np.count_nonzero(nz & ((w < lo * (1 - 1e-14)) | (w > hi * (1 + 1e-14)))))
        return bad


def build_partition(lat, M, K=2.0):
    lat = as_lattice(lat)
    M = as_anisotropy(M)
    if M.n != lat.n:
        raise ValueError("anisotropy vector and lattice dimensions differ")
    prof = build_bump(K)
    r = m_norm(M, lat.freq_grid())
    top = float(r.max())
    H = 0
    while 2.0**H / prof.K < top:
        H += 1
    phi = np.empty((H + 2,) + lat.shape)
    phi[0] = prof(r)
    for h in range(H + 1):
        phi[h + 1] = prof(r / 2.0 ** (h + 1)) - prof(r / 2.0**h)
    phi.setflags(write=False)
    return DyadicPartition(lat, M, K, prof, r, phi)


def dyadic_blocks(u, part):
    if u.lattice != part.lattice:
        raise ValueError("function and partition live on different lattices")
    uh = u.freq()
    return [GridFunction(part.lattice, FREQUENCY, part.phi(h) * uh) for h in part.shells]


def _derivative(a, nu):
    out = a
    for axis, k in enumerate(nu):
        for _ in range(int(k)):
            out = np.gradient(out, axis=axis)
    return out


def partition_derivative_constants(part, nu):
    """Measured sup_h 2^(h<nu,1/M>) max |D^nu phi_h| with lattice-step differences."""
    nu = tuple(int(v) for v in nu)
    if sum(nu) > 4:
        raise ValueError("derivative order above 4 is not supported")
    order = float(m_order(part.M, nu))
    table = {}
    for h in part.shells:
        f = np.fft.fftshift(part.phi(h))
        table[h] = float(np.max(np.abs(_derivative(f, nu)))) * 2.0 ** (h * order)
    return {"per_shell": table, "constant": max(table.values())}


def write_partition_csv(part, directory):
    """One CSV per shell listing frequency, |xi|_M and phi_h at its nonzero points."""
    import os

    os.makedirs(directory, exist_ok=True)
    freqs = part.lattice.freq_grid().reshape(-1, part.lattice.n)
    paths = []
    for h in part.shells:
        path = os.path.join(str(directory), f"phi_h{h}.csv")
        vals = part.phi(h).reshape(-1)
        norms = part.norms.reshape(-1)
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow([f"k{j}" for j in range(part.lattice.n)] + ["m_norm", "phi"])
            for k, r, v in zip(freqs, norms, vals):
                if v != 0:
                    w.writerow([int(c) for c in k] + [format(r, ".17g"), format(v, ".17g")])
        paths.append(path)
    return paths
