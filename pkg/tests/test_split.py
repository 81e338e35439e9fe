import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from anisofl.cli import example_p_coefficient, example_p_symbol
from anisofl.dyadic import Transition, build_partition
from anisofl.lattice import FrequencyLattice, physical, plane_wave, unit_mode
from anisofl.quantize import apply_multiplier
from anisofl.split import (
    exact_kappa,
    mollify,
    smoothing_multiplier,
    taylor_split,
    verify_mollifier_bounds,
    verify_split_classes,
)
from anisofl.symbol import GridTensor, XMultiplier, kappa_stratum, weight_symbol

M = (1, 2)
LAT = FrequencyLattice((16, 16))


def test_smoothing_multiplier_limits():
    assert np.all(smoothing_multiplier(M, 1e-4).on(LAT) == 1.0)
    c = physical(LAT, np.full(LAT.shape, 3.0))
    assert np.array_equal(mollify(c.phys(), LAT, M, 0.3), c.phys())
    with pytest.raises(ValueError):
        smoothing_multiplier(M, 0.0)
    with pytest.raises(ValueError):
        smoothing_multiplier("1,3/2", 0.5)


def test_smoothing_single_mode_midpoint():
    # <eps^(1/M) k>_M = sqrt(1 + eps^2) = 3/2 for k = (1, 0); the symmetric kernel gives 1/2 there
    eps = math.sqrt(1.25)
    v = apply_multiplier(smoothing_multiplier(M, eps), unit_mode(LAT, (1, 0))).freq()
    assert abs(v[1, 0] - 0.5) < 1e-9
    assert np.sum(np.abs(v)) - abs(v[1, 0]) == 0


@given(st.floats(1e-3, 10))
def test_smoothing_bounded(eps):
    vals = smoothing_multiplier(M, eps).on(LAT)
    assert np.all(np.abs(vals) <= 1) and np.all(vals.real >= 0)


def test_exact_kappa():
    assert exact_kappa(4, math.inf, 2, M) == 2
    assert exact_kappa(4, 2, 2, M) == Fraction(3)
    assert exact_kappa(Fraction(5, 2), 3, 2, M) == Fraction(5, 2) - Fraction(4, 3)


def test_mollifier_power_laws():
    c = example_p_coefficient(8, 14, 1.0, 1.0, FrequencyLattice((1024, 64)))
    r0 = verify_mollifier_bounds(c, 4, math.inf, M, (0, 0))
    assert abs(r0["operator_slopes"]["i"]) <= 0.1
    assert abs(r0["operator_slopes"]["ii"] - 1.0) <= 0.15
    r1 = verify_mollifier_bounds(c, 4, math.inf, M, (1, 0))
    assert abs(r1["operator_slopes"]["i"] + 1.0) <= 0.15
    with pytest.raises(ValueError):
        verify_mollifier_bounds(c, 0.5, 2, M, (0, 0))


def test_split_x_independent():
    part = build_partition(LAT, M)
    res = taylor_split(weight_symbol(M), 0.5, part, 2, 2)
    assert np.all(res.a_natural.tensor(LAT) == 0)
    assert res.reconstruction_error() == 0
    assert verify_split_classes(res, 1.0)["a_natural"] is None


def test_split_plane_wave():
    part = build_partition(LAT, M)
    k = np.array([1.0, 0.0])
    a = XMultiplier(plane_wave(LAT, k))
    res = taylor_split(a, 0.25, part, 4, math.inf)
    prof = Transition(1.0, 2.0)
    # closed form: e^{i k x} sum_h phi((2^(-h/4))^(1/M) k) phi_h(xi); for k = (1, 0), <.>_M = sqrt(1 + 2^(-h/2))
    factor = sum(float(prof(math.sqrt(1 + 2.0 ** (-2 * h * 0.25)))) * part.phi(h) for h in part.shells)
    expect = plane_wave(LAT, k).phys()[:, :, None, None] * factor[None, None]
    assert np.max(np.abs(res.a_sharp.tensor(LAT) - expect)) < 1e-12


@given(st.integers(0, 2**31), st.sampled_from([0.25, 0.5, 1.0]))
def test_split_reconstruction(seed, delta):
    r = np.random.default_rng(seed)
    lat = FrequencyLattice((8, 8))
    part = build_partition(lat, M)
    a = GridTensor(lat, r.standard_normal(lat.shape * 2) + 1j * r.standard_normal(lat.shape * 2))
    res = taylor_split(a, delta, part, 3, 2)
    assert res.reconstruction_error() < 1e-12


def test_split_example_symbol_classes(tmp_path):
    out = []
    for N in (32, 64):
        lat = FrequencyLattice((N, N))
        part = build_partition(lat, M)
        res = taylor_split(example_p_symbol(8, 14, 1.0, 1.0, lat), 0.25, part, 4, math.inf)
        assert res.reconstruction_error() < 1e-12
        cls = verify_split_classes(res, 1.0)
        assert cls["a_sharp"].all_finite() and cls["a_natural"].all_finite()
        assert cls["reduced_order"] == 0.5
        out.append((cls["a_sharp"].max_constant(), cls["a_natural"].max_constant()))
    for j in range(2):
        vals = [o[j] for o in out]
        assert max(vals) / min(vals) < 2
    res.export(tmp_path / "split", stride=16)
    assert {p.name for p in (tmp_path / "split").iterdir()} == {"a_sharp.csv", "a_natural.csv",
                                                                  "split_manifest.json"}


def test_split_shell_locality():
    lat = FrequencyLattice((32, 32))
    part = build_partition(lat, M)
    res = taylor_split(example_p_symbol(8, 14, 1.0, 1.0, lat), 0.25, part, 4, math.inf)
    for d, prof in res.a_sharp.terms:
        prof = np.asarray(prof)
        if np.all(d == d.flat[0]):
            continue
        nz = prof != 0
        assert nz.any()
        hs = [h for h in part.shells if np.all(part.phi(h)[nz] != 0)]
        assert hs


def test_log_stratum_attained():
    # r = 4, p = inf gives kappa = 4 - 2 = 2 = <(2,0), 1/M>, so the logarithmic bound is the one applied there
    assert kappa_stratum(M, (2, 0), exact_kappa(4, math.inf, 2, M)) == 0
    lat = FrequencyLattice((32, 32))
    part = build_partition(lat, M)
    res = taylor_split(example_p_symbol(8, 14, 1.0, 1.0, lat), 1.0, part, 4, math.inf)
    rep = verify_split_classes(res, 1.0)["a_sharp"]
    assert rep.all_finite() and ((0, 0), (2, 0)) in rep.constants
