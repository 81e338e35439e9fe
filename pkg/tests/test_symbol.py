import math
from fractions import Fraction

import numpy as np
import pytest

from anisofl.cli import example_p_symbol
from anisofl.dyadic import build_partition
from anisofl.lattice import FrequencyLattice, physical, plane_wave
from anisofl.symbol import (
    Callable,
    Elementary,
    GridTensor,
    Multiplier,
    XMultiplier,
    char_set,
    elementary_from_grid,
    estimate_fl_class,
    estimate_kappa_class,
    estimate_smooth_class,
    is_m_elliptic,
    kappa_stratum,
    weight_symbol,
)
from anisofl.mweight import m_weight

M = (1, 2)
LAT = FrequencyLattice((16, 16))
Z = (0, 0)


def test_weight_in_smooth_class():
    rep = estimate_smooth_class(weight_symbol(M, 1.0), LAT, 1.0, 0.0, M, max_orders=(2, 1))
    assert math.isclose(rep.constants[(Z, Z)], 1.0, rel_tol=1e-14)
    assert rep.all_finite()


def test_plane_wave_x_only():
    # d^beta_x e^{i x k} = (ik)^beta e^{i x k}; k = (1, 0) gives |k^beta| = 1 or 0
    a = XMultiplier(plane_wave(LAT, (1, 0)))
    rep = estimate_smooth_class(a, LAT, 0.0, 0.0, M, max_orders=(1, 2))
    for (al, be), c in rep.constants.items():
        expect = 0.0 if any(al) or be[1] > 0 else 1.0
        assert abs(c - expect) < 1e-12
    assert not any(rep.growth_flags.values())


def test_constant_symbol():
    one = Multiplier(fn=lambda xi: np.ones(xi.shape[:-1]))
    rep = estimate_smooth_class(one, LAT, 0.0, 0.0, M)
    for k, c in rep.constants.items():
        assert c == (1.0 if k == (Z, Z) else 0.0)


def test_kappa_class_delta_zero_matches_smooth():
    a = Callable(lambda x, xi: (2 + np.sin(x[..., 0])) * m_weight(M, xi), lattice=LAT)
    smooth = estimate_smooth_class(a, LAT, 1.0, 0.0, M, max_orders=(1, 2))
    # kappa = 1/3 is never attained by <beta, 1/M> in (1/2) Z, so no logarithmic stratum
    kap = estimate_kappa_class(a, LAT, 1.0, 0.0, Fraction(1, 3), M, max_orders=(1, 2))
    for k in smooth.constants:
        assert math.isclose(smooth.constants[k], kap.constants[k], rel_tol=1e-14, abs_tol=1e-300)


def test_kappa_stratum_exact():
    assert kappa_stratum(M, (0, 2), Fraction(1)) == 0
    assert kappa_stratum(M, (1, 1), Fraction(1)) == 1
    for b1 in range(4):
        for b2 in range(4):
            assert kappa_stratum(M, (b1, b2), math.sqrt(2)) != 0


def test_fl_class_single_mode():
    k = np.array([2, 1])
    a = XMultiplier(plane_wave(LAT, k))
    rep = estimate_fl_class(a, LAT, 0.0, 2.0, math.inf, 0.0, M, N=1)
    assert math.isclose(rep.constants[("FL1", Z)], 1.0, rel_tol=1e-12)
    assert math.isclose(rep.constants[("FLpr", Z)], m_weight(M, k) ** 2, rel_tol=1e-12)
    zero = estimate_fl_class(XMultiplier(physical(LAT, np.zeros(LAT.shape))), LAT, 0.0, 2.0, 2, 0.0, M)
    assert all(c == 0 for c in zero.constants.values())
    with pytest.raises(ValueError):
        estimate_fl_class(weight_symbol(M), LAT, 1.0, 2.0, 2, 0.0, M)


def test_fl_class_example_symbol_finite():
    P = example_p_symbol(5, 9, 1.0, 1.0, FrequencyLattice((32, 32)))
    rep = estimate_fl_class(P, FrequencyLattice((32, 32)), 1.0, 4.0, math.inf, 0.0, M, N=1)
    assert rep.all_finite()


def test_ellipticity():
    ok, w = is_m_elliptic(weight_symbol(M, 1.0), LAT, 1.0, 1.0, 2.0, M)
    assert ok and math.isclose(w["ratio"], 1.0, rel_tol=1e-14)
    ok, w = is_m_elliptic(Multiplier(fn=lambda xi: xi[..., 0]), LAT, 1.0, 0.1, 2.0, M)
    assert not ok and w["xi"][0] == 0.0


def test_example_symbol_ellipticity():
    lat = FrequencyLattice((32, 32))
    P = example_p_symbol(1, 1, 2.0, 2.0, lat)
    assert not is_m_elliptic(P, lat, 1.0, 0.05, 2.0, M)[0]
    xi = lat.freq_grid().astype(float)
    off = np.abs(xi[..., 0] - xi[..., 1] ** 2) >= 0.5 * m_weight(M, xi)
    assert is_m_elliptic(P, lat, 1.0, 0.5, 2.0, M, xi_mask=off)[0]


def test_char_set_examples():
    assert not char_set(weight_symbol(M, 1.0), LAT, 1.0, M, directions=32, shell_range=range(1, 4)).flagged()
    a = Multiplier(fn=lambda xi: xi[..., 0] + 1j * xi[..., 1] ** 2)
    assert not char_set(a, LAT, 1.0, M, directions=32, shell_range=range(1, 4)).flagged()


def test_char_set_rescaling():
    lat = FrequencyLattice((64, 64))
    P = example_p_symbol(1, 1, 2.0, 2.0, lat)
    idx = [(i, j) for i in range(0, 64, 16) for j in range(0, 64, 16)]
    base = char_set(P, lat, 1.0, M, threshold=0.1, directions=64, x_indices=idx)
    twice = char_set(2.0 * P, lat, 1.0, M, threshold=0.2, directions=64, x_indices=idx)
    assert base.flagged() == twice.flagged() and base.flagged()


def test_elementary_from_grid():
    lat = FrequencyLattice((8, 8))
    part = build_partition(lat, M)
    d = np.cos(lat.x_grid()[..., 0]) + 0j
    vals = np.broadcast_to(d[:, :, None, None], lat.shape * 2)
    sym, err = elementary_from_grid(GridTensor(lat, vals), part)
    assert isinstance(sym, Elementary) and err < 1e-14
    wiggly = vals * np.cos(lat.freq_grid()[..., 0].astype(float))[None, None]
    _, err2 = elementary_from_grid(GridTensor(lat, wiggly), part)
    assert err2 > 0.1
