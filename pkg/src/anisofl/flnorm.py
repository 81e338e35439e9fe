"""Discrete Fourier-Lebesgue norms, their dyadic counterparts and synthesis bounds."""
import math
from dataclasses import dataclass

import numpy as np

from .dyadic import overlap_bound, shell_bounds
from .lattice import FREQUENCY, GridFunction
from .mweight import AnisotropyVector, as_anisotropy, m_norm, m_weight


@dataclass(frozen=True)
class FLParams:
    s: float
    p: float
    M: AnisotropyVector

    def __post_init__(self):
        p = math.inf if self.p in ("inf", "infinity") else float(self.p)
        if not p >= 1:
            raise ValueError("p must be at least 1")
        object.__setattr__(self, "p", p)
        object.__setattr__(self, "s", float(self.s))
        object.__setattr__(self, "M", as_anisotropy(self.M))

    @property
    def q(self):
        return conjugate(self.p)


def conjugate(p):
    p = float(p)
    if p == 1:
        return math.inf
    if math.isinf(p):
        return 1.0
    return p / (p - 1.0)


def lp(values, p):
    """Plain l^p norm of an array."""
    a = np.abs(np.asarray(values)).ravel()
    if a.size == 0:
        return 0.0
    if math.isinf(p):
        return float(a.max())
    if p == 1:
        return float(a.sum())
    top = a.max()
    if top == 0:
        return 0.0
    return float(top * np.sum((a / top) ** p) ** (1.0 / p))


def weight_grid(lat, M):
    return m_weight(M, lat.freq_grid())


def fl_norm_values(uhat, lat, s, p, M):
    return lp(weight_grid(lat, M) ** s * np.abs(uhat), p)


def fl_norm(u, prm):
    return fl_norm_values(u.freq(), u.lattice, prm.s, prm.p, prm.M)


def fl_dyadic_norm(blocks, s, p):
    """(sum_h 2^(s h p) ||u_h||_p^p)^(1/p); block i carries shell index h = i - 1."""
    p = math.inf if math.isinf(float(p)) else float(p)
    norms = np.array([2.0 ** (s * (i - 1)) * lp(b.freq(), p) for i, b in enumerate(blocks)])
    if norms.size == 0:
        return 0.0
    return lp(norms, p)


def _shell_ratio_range(s, K, h_max):
    """Extremes of 2^(s h) / <xi>_M^s over shell supports, h = -1..h_max."""
    A = math.sqrt(1 + 4 * K * K)
    B = math.sqrt(1 + K * K)
    cands = [2.0 ** (-s), 2.0 ** (-s) * B ** (-s)]
    if h_max >= 0:
        cands += [A ** (-s), (2 * K) ** s]
    return min(cands), max(cands)


def equivalence_constant(s, p, K, h_max=1):
    """C with 1/C <= dyadic norm / norm <= C for blocks of a partition with parameter K.

    On each shell 2^h/(2K) <= <xi>_M <= (1+4K^2)^(1/2) 2^h (ball: 1 <= <xi>_M <= (1+K^2)^(1/2)),
    and for p < inf the sum of phi_h^p lies between (N0+1)^(1-p) and 1."""
    lo, hi = _shell_ratio_range(float(s), float(K), h_max)
    q = conjugate(p)
    spread = (overlap_bound(K) + 1) ** (0.0 if math.isinf(q) else 1.0 / q)
    return max(hi, spread / lo)


def synthesis_constant(s, p, K, kind):
    s = float(s)
    q = conjugate(p)
    if kind == "shell":
        lo, _ = _shell_ratio_range(s, float(K), 1)
        return (overlap_bound(K) + 1) ** (0.0 if math.isinf(q) else 1.0 / q) / lo
    if kind == "ball":
        if s <= 0:
            raise ValueError("ball-supported synthesis needs s > 0")
        A = max(math.sqrt(1 + 4 * K * K), 2 * math.sqrt(1 + K * K))
        geo = 1.0 / (1.0 - 2.0 ** (-s))
        return A**s * geo ** (0.0 if math.isinf(q) else 1.0 / q)
    raise ValueError(f"unknown support kind {kind!r}")


def synthesis_bound(blocks, s, p, K, support_kind, M):
    """Reconstruct u = sum u_h and certify fl_norm(u) <= C * dyadic norm.

    Block i is taken to have shell index h = i - 1.  Supports are scanned:
    shell blocks must lie in the dyadic shell, ball blocks in |xi|_M <= K 2^(h+1)."""
    M = as_anisotropy(M)
    if support_kind == "ball" and s <= 0:
        raise ValueError("ball-supported synthesis needs s > 0")
    if support_kind not in ("shell", "ball"):
        raise ValueError(f"unknown support kind {support_kind!r}")
    if not blocks:
        return 0.0, None
    lat = blocks[0].lattice
    r = m_norm(M, lat.freq_grid())
    total = np.zeros(lat.shape, dtype=complex)
    for i, b in enumerate(blocks):
        if b.lattice != lat:
            raise ValueError("blocks live on different lattices")
        h = i - 1
        lo, hi = shell_bounds(h, K)
        if support_kind == "ball":
            lo = 0.0
        v = b.freq()
        if np.any((v != 0) & ((r < lo) | (r > hi))):
            raise ValueError(f"block {h} is not supported where the {support_kind} case requires")
        total = total + v
    u = GridFunction(lat, FREQUENCY, total)
    bound = synthesis_constant(s, p, K, support_kind) * fl_dyadic_norm(blocks, s, p)
    actual = fl_norm(u, FLParams(s, p, M))
    if actual > bound * (1 + 1e-12):
        raise RuntimeError(f"synthesis bound violated: {actual} > {bound}")
    return bound, u


def norm_record(u, s, p, M, part):
    from .dyadic import dyadic_blocks

    prm = FLParams(s, p, M)
    value = fl_norm(u, prm)
    dyad = fl_dyadic_norm(dyadic_blocks(u, part), s, p)
    return {
        "s": prm.s,
        "p": "inf" if math.isinf(prm.p) else prm.p,
        "M": prm.M.label(),
        "value": value,
        "dyadic_value": dyad,
        "ratio": dyad / value if value else float("nan"),
    }
