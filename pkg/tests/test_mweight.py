import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from anisofl.mweight import (
    AnisotropyVector,
    anis_dilate,
    as_anisotropy,
    growth_constant,
    m_norm,
    m_order,
    m_projection,
    m_weight,
    smooth_weight,
    subadditivity_bound,
    subadditivity_constant,
    unit_directions,
)

weights = st.lists(st.integers(1, 4), min_size=1, max_size=3)
coords = st.floats(-50, 50, allow_nan=False)


def test_m_norm_examples():
    assert m_norm((1, 2), np.array([3.0, 2.0])) == 5.0
    xi = np.array([0.3, -1.2, 4.0])
    assert math.isclose(m_norm((1, 1, 1), xi), float(np.linalg.norm(xi)), rel_tol=1e-15)
    assert m_norm((2, 3), np.zeros(2)) == 0.0


def test_m_weight_examples():
    assert m_weight((1, 2), np.zeros(2)) == 1.0
    assert math.isclose(m_weight((1, 2), np.array([3.0, 2.0])), math.sqrt(26), rel_tol=1e-15)
    xi = np.array([[1.5, -2.0], [0.0, 3.0]])
    expect = np.sqrt(1 + xi[:, 0] ** 2 + xi[:, 1] ** 4)
    assert np.allclose(m_weight((1, 2), xi), expect, rtol=1e-15)


def test_dimension_mismatch():
    with pytest.raises(ValueError):
        m_norm((1, 2), np.zeros(3))
    with pytest.raises(ValueError):
        m_order((1, 2), (1,))


def test_anis_dilate_examples():
    assert np.allclose(anis_dilate((1, 2), 16.0, np.array([1.0, 1.0])), [16.0, 4.0])
    xi = np.array([0.7, -3.0])
    assert np.array_equal(anis_dilate((1, 2), 1.0, xi), xi)
    with pytest.raises(ValueError):
        anis_dilate((1, 2), 0.0, xi)


@given(weights, st.floats(1e-3, 1e3), st.lists(coords, min_size=3, max_size=3))
def test_homogeneity(mu, t, raw):
    xi = np.array(raw[: len(mu)])
    lhs = m_norm(mu, anis_dilate(mu, t, xi))
    assert math.isclose(lhs, t * m_norm(mu, xi), rel_tol=1e-12, abs_tol=1e-300)


def test_m_order_examples():
    assert m_order((1, 2), (2, 1)) == Fraction(5, 2)
    assert m_order((1, 2), (0, 0)) == 0
    assert m_order((1, 1, 1), (1, 2, 3)) == 6
    assert isinstance(m_order((1, 3), (1, 1)), Fraction)


@given(weights, st.data())
def test_m_order_additive(mu, data):
    n = len(mu)
    a = data.draw(st.tuples(*[st.integers(0, 5)] * n))
    b = data.draw(st.tuples(*[st.integers(0, 5)] * n))
    s = tuple(x + y for x, y in zip(a, b))
    assert m_order(mu, s) == m_order(mu, a) + m_order(mu, b)


def test_rational_weights_parse():
    M = AnisotropyVector.parse("1,3/2")
    assert M.mu == (Fraction(1), Fraction(3, 2))
    assert not M.integer_flag
    assert M.min_order == 1 and M.max_order == Fraction(3, 2)
    assert M.homogeneous_dimension == Fraction(5, 3)
    assert as_anisotropy("1,2") == AnisotropyVector((1, 2))
    with pytest.raises(ValueError):
        AnisotropyVector((1, 0))


def test_smooth_weight():
    xi = np.array([1.0, 1.0])
    assert math.isclose(smooth_weight((1, 2), xi), math.sqrt(3), rel_tol=1e-15)
    with pytest.raises(NotImplementedError):
        smooth_weight(AnisotropyVector.parse("1,3/2"), xi)


def test_growth_and_subadditivity(rng):
    xi = rng.uniform(-100, 100, size=(2000, 2))
    eta = rng.uniform(-100, 100, size=(2000, 2))
    C = growth_constant((1, 2), xi)
    w = m_weight((1, 2), xi)
    e = np.sqrt(1 + np.sum(xi**2, axis=1))
    assert np.all(e / C <= w * (1 + 1e-12)) and np.all(w <= C * e**2 * (1 + 1e-12))
    measured = subadditivity_constant((1, 2), xi, eta)
    assert 0 < measured <= subadditivity_bound((1, 2))


def test_unit_directions_on_sphere():
    d = unit_directions((1, 2), 64)
    assert d.shape == (64, 2)
    assert np.allclose(m_norm((1, 2), d), 1.0, atol=1e-14)
    p = m_projection((1, 2), np.array([[4.0, 2.0], [0.0, 0.0]]))
    assert math.isclose(m_norm((1, 2), p[0]), 1.0, rel_tol=1e-14)
    assert np.all(p[1] == 0)
