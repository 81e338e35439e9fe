"""Anisotropic norms, weights, dilations and multi-index orders.

A weight vector M = (mu_1, ..., mu_n) of positive rationals fixes the
quasi-norm |xi|_M = (sum |xi_j|^(2 mu_j))^(1/2) and the weight
<xi>_M = (1 + |xi|_M^2)^(1/2).  Orders of multi-indices are kept as
exact fractions so that comparisons between them never depend on rounding.
"""
from fractions import Fraction

import numpy as np


def _as_fraction(v):
    if isinstance(v, Fraction):
        return v
    if isinstance(v, (int, np.integer)):
        return Fraction(int(v))
    if isinstance(v, str):
        return Fraction(v)
    return Fraction(v).limit_denominator(10**6)


class AnisotropyVector:
    """The weight vector M.  Entries are stored as Fractions."""

    __slots__ = ("mu",)

    def __init__(self, mu):
        if isinstance(mu, AnisotropyVector):
            mu = mu.mu
        mu = tuple(_as_fraction(m) for m in mu)
        if not mu:
            raise ValueError("anisotropy vector must be non-empty")
        if any(m <= 0 for m in mu):
            raise ValueError(f"weights must be positive, got {mu}")
        object.__setattr__(self, "mu", mu)

    def __setattr__(self, name, value):
        raise AttributeError("AnisotropyVector is immutable")

    @classmethod
    def parse(cls, text):
        """Build from a comma separated string such as '1,2' or '1,3/2'."""
        return cls([Fraction(t.strip()) for t in str(text).split(",") if t.strip()])

    @property
    def n(self):
        return len(self.mu)

    @property
    def integer_flag(self):
        return all(m.denominator == 1 for m in self.mu)

    @property
    def min_order(self):
        return min(self.mu)

    @property
    def max_order(self):
        return max(self.mu)

    @property
    def homogeneous_dimension(self):
        return sum(Fraction(1) / m for m in self.mu)

    def as_float(self):
        return np.array([float(m) for m in self.mu])

    def __eq__(self, other):
        return isinstance(other, AnisotropyVector) and self.mu == other.mu

    def __hash__(self):
        return hash(self.mu)

    def __repr__(self):
        return "AnisotropyVector(" + ",".join(str(m) for m in self.mu) + ")"

    def label(self):
        return ",".join(str(m) for m in self.mu)


def as_anisotropy(M):
    if isinstance(M, AnisotropyVector):
        return M
    if isinstance(M, str):
        return AnisotropyVector.parse(M)
    return AnisotropyVector(M)


def _check_dim(M, xi):
    xi = np.asarray(xi, dtype=float)
    if xi.shape[-1:] != (M.n,):
        raise ValueError(f"expected last axis of length {M.n}, got shape {xi.shape}")
    return xi


def m_norm_sq(M, xi):
    """|xi|_M^2 along the last axis of ``xi``."""
    M = as_anisotropy(M)
    xi = _check_dim(M, xi)
    out = np.zeros(xi.shape[:-1])
    for j, m in enumerate(M.mu):
        a = np.abs(xi[..., j])
        if m.denominator == 1:
            out = out + a ** (2 * m.numerator)
        else:
            out = out + a ** (2 * float(m))
    return out


def m_norm(M, xi):
    return np.sqrt(m_norm_sq(M, xi))


def m_weight(M, xi):
    return np.sqrt(1.0 + m_norm_sq(M, xi))


def anis_dilate(M, t, xi):
    """Componentwise t^(1/mu_j) xi_j."""
    M = as_anisotropy(M)
    if not np.all(np.asarray(t) > 0):
        raise ValueError("dilation factor must be positive")
    xi = _check_dim(M, xi)
    t = np.asarray(t, dtype=float)[..., None]
    return xi * t ** (1.0 / M.as_float())


def m_order(M, alpha):
    """Exact <alpha, 1/M> as a Fraction."""
    M = as_anisotropy(M)
    alpha = tuple(int(a) for a in alpha)
    if len(alpha) != M.n:
        raise ValueError("multi-index length does not match dimension")
    if any(a < 0 for a in alpha):
        raise ValueError("multi-index entries must be nonnegative")
    return sum((Fraction(a) / m for a, m in zip(alpha, M.mu)), Fraction(0))


def smooth_weight(M, xi):
    """Smooth weight equivalent to <xi>_M; for integer M it is <xi>_M itself."""
    M = as_anisotropy(M)
    if not M.integer_flag:
        raise NotImplementedError("smooth equivalent weight is only provided for integer M")
    return m_weight(M, xi)


def growth_constant(M, xi):
    """Smallest C with C^-1 <xi>^mu_min <= <xi>_M <= C <xi>^mu_max on the samples.

    Here <xi> is the Euclidean weight.  Returns the measured value."""
    M = as_anisotropy(M)
    xi = _check_dim(M, xi)
    w = m_weight(M, xi)
    e = np.sqrt(1.0 + np.sum(xi**2, axis=-1))
    lo = e ** float(M.min_order) / w
    hi = w / e ** float(M.max_order)
    return float(max(lo.max(), hi.max()))


def subadditivity_constant(M, xi, eta):
    """Measured sup of |xi+eta|_M / (|xi|_M + |eta|_M) over paired samples."""
    M = as_anisotropy(M)
    xi = _check_dim(M, xi)
    eta = _check_dim(M, eta)
    den = m_norm(M, xi) + m_norm(M, eta)
    num = m_norm(M, xi + eta)
    ok = den > 0
    return float(np.max(num[ok] / den[ok])) if ok.any() else 0.0


def subadditivity_bound(M):
    """Analytic C with |xi+eta|_M <= C (|xi|_M + |eta|_M).

    Uses |a+b|^(2mu) <= max(1, 2^(2mu-1)) (|a|^(2mu) + |b|^(2mu))."""
    M = as_anisotropy(M)
    worst = max(max(1.0, 2.0 ** (2 * float(m) - 1)) for m in M.mu)
    return float(np.sqrt(worst))


def unit_directions(M, count):
    """Directions on the unit M-sphere from a uniform angular grid (n = 1 or 2)."""
    M = as_anisotropy(M)
    if M.n == 1:
        return np.array([[1.0], [-1.0]])
    if M.n != 2:
        raise ValueError("direction grids are provided for n <= 2")
    theta = 2 * np.pi * np.arange(count) / count
    v = np.stack([np.cos(theta), np.sin(theta)], axis=-1)
    return anis_dilate(M, 1.0 / m_norm(M, v), v)


def m_projection(M, xi):
    """Map nonzero xi to the unit M-sphere along its dilation orbit."""
    M = as_anisotropy(M)
    xi = _check_dim(M, xi)
    r = m_norm(M, xi)
    safe = np.where(r > 0, r, 1.0)
    out = anis_dilate(M, 1.0 / safe, xi)
    out[r == 0] = 0.0
    return out
