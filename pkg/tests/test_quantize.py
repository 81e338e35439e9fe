import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from anisofl.dyadic import build_partition, overlap_bound
from anisofl.lattice import FrequencyLattice, GridFunction, plane_wave, random_band_limited, unit_mode
from anisofl.mweight import m_weight
from anisofl.quantize import (
    apply_multiplier,
    dense_matrix,
    derivative_multiplier,
    kohn_nirenberg_apply,
    lambda_multiplier,
    operator_norm_probe,
    paraproduct_certificates,
    paraproduct_split,
    paraproduct_ratios,
)
from anisofl.symbol import Elementary, GridTensor, Multiplier, XMultiplier, identity_symbol, weight_symbol

M = (1, 2)
LAT = FrequencyLattice((16, 16))


def _brute_force(a_vals, uhat, lat):
    """v(x) = sum_xi e^{i x xi} a(x, xi) uhat(xi), one x at a time (n = 1)."""
    x = lat.x_axes()[0]
    xi = lat.freq_axes()[0]
    return np.array([sum(np.exp(1j * x[i] * xi[k]) * a_vals[i, k] * uhat[k] for k in range(len(xi)))
                     for i in range(len(x))])


def test_multiplier_examples(rng):
    u = random_band_limited(LAT, rng)
    assert np.array_equal(apply_multiplier(identity_symbol(), u).freq(), u.freq())
    v = apply_multiplier(derivative_multiplier(1), plane_wave(LAT, (2, -3))).phys()
    assert np.max(np.abs(v - (-3) * plane_wave(LAT, (2, -3)).phys())) < 1e-12
    w = apply_multiplier(weight_symbol(M, -1.5), apply_multiplier(weight_symbol(M, 1.5), u))
    assert np.max(np.abs(w.freq() - u.freq())) < 1e-12
    with pytest.raises(ValueError):
        apply_multiplier(Multiplier(fn=lambda xi: np.where(xi[..., 0] == 0, np.nan, xi[..., 0])), u)


def test_kn_special_forms(rng):
    u = random_band_limited(LAT, rng)
    a = weight_symbol(M, 1.0)
    assert np.max(np.abs(kohn_nirenberg_apply(a, u).freq() - apply_multiplier(a, u).freq())) < 1e-12
    d = GridFunction(LAT, "physical", np.sin(LAT.x_grid()[..., 1]) + 2)
    v = kohn_nirenberg_apply(XMultiplier(d), u).phys()
    assert np.max(np.abs(v - d.phys() * u.phys())) < 1e-12


@pytest.mark.parametrize("N", [8, 16, 32])
def test_kn_against_brute_force(N, rng):
    lat = FrequencyLattice((N,))
    vals = rng.standard_normal((N, N)) + 1j * rng.standard_normal((N, N))
    a = GridTensor(lat, vals)
    u = random_band_limited(lat, rng, modes=6, fraction=1.0)
    v = kohn_nirenberg_apply(a, u).phys()
    assert np.max(np.abs(v - _brute_force(vals, u.freq(), lat))) < 1e-12
    dense = (dense_matrix(a, lat) @ u.freq().reshape(-1)).reshape(lat.shape)
    assert np.max(np.abs(dense - kohn_nirenberg_apply(a, u).freq())) < 1e-12


def test_dense_matrix_examples():
    lat = FrequencyLattice((8, 4))
    assert np.max(np.abs(dense_matrix(identity_symbol(), lat) - np.eye(32))) < 1e-14
    A = dense_matrix(weight_symbol(M), lat)
    assert np.max(np.abs(A - np.diag(np.diag(A)))) < 1e-14
    assert np.allclose(np.diag(A), m_weight(M, lat.freq_grid()).reshape(-1), rtol=1e-14)
    B = dense_matrix(derivative_multiplier(0), lat)
    both = Multiplier(fn=lambda xi: m_weight(M, xi) * xi[..., 0])
    assert np.max(np.abs(A @ B - dense_matrix(both, lat))) < 1e-12
    with pytest.raises(MemoryError):
        dense_matrix(identity_symbol(), FrequencyLattice((128, 64)))


@given(st.integers(0, 2**31))
def test_kn_linear(seed):
    r = np.random.default_rng(seed)
    lat = FrequencyLattice((8, 8))
    a = GridTensor(lat, r.standard_normal(lat.shape * 2))
    u = random_band_limited(lat, r, modes=5)
    v = random_band_limited(lat, r, modes=5)
    lhs = kohn_nirenberg_apply(a, u.scale(2.0) + v.scale(-1j)).freq()
    rhs = 2.0 * kohn_nirenberg_apply(a, u).freq() - 1j * kohn_nirenberg_apply(a, v).freq()
    assert np.max(np.abs(lhs - rhs)) < 1e-12


def test_lambda_identity(rng):
    for Mv, lat in [((1,), FrequencyLattice((32,))), (M, FrequencyLattice((32, 16)))]:
        xi = lat.freq_grid().astype(float)
        mumin, mumax = min(Mv), max(Mv)
        w = m_weight(Mv, xi)
        rhs = w ** (mumin / mumax - 2) + sum(lambda_multiplier(Mv, j).on(lat) * xi[..., j]
                                               for j in range(len(Mv)))
        assert np.max(np.abs(rhs - w ** (mumin / mumax))) < 1e-12
        u = random_band_limited(lat, rng)
        lhs = apply_multiplier(weight_symbol(Mv, mumin / mumax), u)
        parts = apply_multiplier(weight_symbol(Mv, mumin / mumax - 2), u).freq()
        for j in range(len(Mv)):
            parts = parts + apply_multiplier(lambda_multiplier(Mv, j), apply_multiplier(derivative_multiplier(j), u)).freq()
        assert np.max(np.abs(lhs.freq() - parts)) < 1e-12
    with pytest.raises(ValueError):
        lambda_multiplier("1,3/2", 0)


def _elementary(part, rng, constant=False):
    lat = part.lattice
    terms = []
    for h in part.shells:
        if constant:
            d = np.full(lat.shape, rng.standard_normal() + 0j)
        else:
            d = random_band_limited(lat, rng, modes=3).phys()
        terms.append((d, part.phi(h)))
    return Elementary(lat, terms, part.shells, part.K)


def test_paraproduct(rng):
    lat = FrequencyLattice((32, 32))
    part = build_partition(lat, M)
    for constant in (True, False):
        a = _elementary(part, rng, constant)
        u = random_band_limited(lat, rng, modes=10)
        T = paraproduct_split(a, u, part)
        whole = kohn_nirenberg_apply(a, u).freq()
        assert np.max(np.abs(sum(t.freq() for t in T) - whole)) < 1e-12
        if constant:
            assert np.max(np.abs(T[2].freq())) < 1e-14
        assert paraproduct_certificates(a, u, part)["violations"] == 0
    with pytest.raises(ValueError):
        paraproduct_split(a, u, part, N0=overlap_bound(part.K) - 1)


def test_paraproduct_single_mode(rng):
    lat = FrequencyLattice((32, 32))
    part = build_partition(lat, M)
    xi0 = np.array([6, 1])
    u = unit_mode(lat, xi0)
    active = [h for h in part.shells if part.phi(h)[lat.freq_index(xi0)] != 0]
    terms = [(np.ones(lat.shape) * (h + 2), part.phi(h)) for h in part.shells]
    a = Elementary(lat, terms, part.shells, part.K)
    v = kohn_nirenberg_apply(a, u).freq()[lat.freq_index(xi0)]
    expect = sum((h + 2) * part.phi(h)[lat.freq_index(xi0)] for h in active)
    assert abs(v - expect) < 1e-12


def test_paraproduct_hypotheses(rng):
    lat = FrequencyLattice((16, 16))
    part = build_partition(lat, M)
    a = _elementary(part, rng)
    with pytest.raises(ValueError):
        paraproduct_ratios(a, part, s=3.0, r=2.0, delta=0.5, p=2, trials=1, which=("T3",))
    with pytest.raises(ValueError):
        paraproduct_ratios(a, part, s=-5.0, r=2.0, delta=0.5, p=2, trials=1, which=("T2",))


def test_operator_norm_probe():
    assert operator_norm_probe(identity_symbol(), LAT, 1.0, 1.0, 2, M, trials=4) == 1.0
    est = operator_norm_probe(weight_symbol(M, 2.0), LAT, 3.0, 1.0, math.inf, M, trials=4)
    assert math.isclose(est, 1.0, rel_tol=1e-14)
    with pytest.raises(ValueError):
        operator_norm_probe(identity_symbol(), LAT, 1.0, 1.0, 2, M, trials=0)
