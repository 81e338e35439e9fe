import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from anisofl.dyadic import build_partition
from anisofl.lattice import FrequencyLattice, physical, plane_wave
from anisofl.microlocal import (
    ConicSector,
    cutoff_function,
    local_scan,
    m_angular_distance,
    mcl_membership_score,
    regularity_pipeline,
    sector_symbol,
    sector_values,
    wavefront_scan,
)
from anisofl.mweight import anis_dilate
from anisofl.symbol import weight_symbol

M2 = (1, 2)


@given(st.floats(-5, 5), st.floats(-5, 5), st.floats(0.1, 3.0))
def test_angular_distance_dilation_invariant(a, b, t):
    xi = np.array([a, b])
    if np.linalg.norm(xi) < 1e-3:
        return
    assert m_angular_distance(M2, xi, anis_dilate(M2, t, xi)) < 1e-9


def test_sector_contains():
    sec = ConicSector((0.0, 1.0), 0.25, 0.5)
    assert sec.contains(M2, np.array([0.0, 9.0]))
    assert sec.contains(M2, np.array([1.0, 16.0]))
    assert not sec.contains(M2, np.array([3.0, 0.0]))
    assert not sec.contains(M2, np.array([0.0, 0.1]))
    whole = ConicSector((1.0, 0.0), 1.0, 0.5)
    assert np.all(whole.contains(M2, np.array([[5.0, 0.0], [-5.0, 0.0], [0.0, -4.0]])))
    with pytest.raises(ValueError):
        ConicSector((0.0, 0.0))
    with pytest.raises(ValueError):
        ConicSector((1.0, 0.0), 1.5)
    with pytest.raises(ValueError):
        ConicSector((0.1, 0.0), 0.25, 0.5).direction(M2)


def test_sector_values_range():
    lat = FrequencyLattice((32, 32))
    sec = ConicSector((1.0, 1.0), 0.3, 0.5)
    v = sector_values(sec, M2, lat.freq_grid())
    assert v.min() >= 0 and v.max() <= 1
    inner = sec.contains(M2, lat.freq_grid())
    assert np.all(v[inner] == 1)
    assert v[0, 0] == 0


def test_sector_symbol_constants():
    lat = FrequencyLattice((32, 32))
    psi = sector_symbol(ConicSector((1.0, 1.0), 0.3, 0.5), M2, lat)
    assert psi.constants is not None


def test_cutoff_function():
    lat = FrequencyLattice((64, 64))
    x0 = (1.0, 2.0)
    phi = np.real(cutoff_function(x0, 1.0, lat).phys())
    x = lat.x_grid()
    d = np.linalg.norm(np.mod(x - np.array(x0) + math.pi, 2 * math.pi) - math.pi, axis=-1)
    assert np.all(phi[d <= 0.5] == 1)
    assert np.all(phi[d >= 1.0] == 0)
    other = np.real(cutoff_function((4.0, 5.0), 1.0, lat).phys())
    assert np.all(phi * other == 0)
    with pytest.raises(ValueError):
        cutoff_function(x0, 4.0, lat)


def test_sector_idempotent_on_inner_sector():
    lat = FrequencyLattice((32, 32))
    sec = ConicSector((1.0, 1.0), 0.3, 0.5)
    v = sector_values(sec, M2, lat.freq_grid())
    inner = sec.contains(M2, lat.freq_grid())
    assert np.array_equal((v * v)[inner], v[inner])


def test_smooth_mode_is_member():
    lat = FrequencyLattice((64, 64))
    part = build_partition(lat, M2)
    u = plane_wave(lat, (2, 3))
    # the cutoff's spectrum is resolved at order 1 on this grid, higher orders need finer grids
    r = mcl_membership_score(u, (math.pi, math.pi), ConicSector((2.0, 3.0), 0.3, 0.5), 1.0, math.inf, M2, part)
    assert r.member and r.slope < -0.5


def test_disjoint_sector_sees_nothing():
    lat = FrequencyLattice((64, 64))
    part = build_partition(lat, M2)
    u = plane_wave(lat, (20, 0))
    r = mcl_membership_score(u, None, ConicSector((0.0, 1.0), 0.2, 0.5), 2.0, math.inf, M2, part)
    assert max(r.masses) == 0
    assert r.member and r.fit_shells == []


def _sawtooth(N):
    # samples of (pi - x)/2 on (0, 2pi), one jump at x = 0
    lat = FrequencyLattice((N,))
    x = lat.x_axes()[0]
    return physical(lat, np.where(x == 0, 0.0, (math.pi - x) / 2))


def test_sawtooth_wavefront_at_jump():
    u = _sawtooth(1024)
    lat = u.lattice
    part = build_partition(lat, (1,))
    xs = [(0.0,), (math.pi,)]
    table = wavefront_scan(u, xs, np.array([[1.0], [-1.0]]), 1.5, math.inf, (1,), part)
    assert table.flagged() == {(0, 0), (0, 1)}
    assert table.projection() == {0}
    local = local_scan(u, xs, 1.5, math.inf, (1,), part)
    assert {i for i, r in local.items() if not r.member} == table.projection()
    # below the critical order the jump is harmless
    quiet = wavefront_scan(u, xs, np.array([[1.0], [-1.0]]), 0.5, math.inf, (1,), part)
    assert quiet.flagged() == set()


def test_wavefront_csv(tmp_path):
    u = _sawtooth(256)
    part = build_partition(u.lattice, (1,))
    table = wavefront_scan(u, [(0.0,)], np.array([[1.0], [-1.0]]), 1.5, math.inf, (1,), part)
    path = tmp_path / "wf.csv"
    table.write_csv(path)
    lines = path.read_text().splitlines()
    assert lines[0].startswith("x0,w0,score,slope,flagged")
    assert len(lines) == 3


def test_pipeline_with_multiplier():
    lat = FrequencyLattice((32, 32))
    part = build_partition(lat, M2)
    rng = np.random.default_rng(3)
    u = physical(lat, np.real(np.fft.ifft2(rng.standard_normal((32, 32)) / (1 + np.add.outer(
        np.fft.fftfreq(32, 1 / 32) ** 2, np.fft.fftfreq(32, 1 / 32) ** 4)))))
    sec = ConicSector((1.0, 1.0), 0.3, 0.5)
    out = regularity_pipeline(weight_symbol(M2, 1.0), u, None, sec, 1.0, 4, 0.25, math.inf, M2, 1.0, part)
    assert out["residual"] < 1e-12
    with pytest.raises(ValueError):
        regularity_pipeline(weight_symbol(M2, 1.0), u, None, sec, 9.0, 4, 0.25, math.inf, M2, 1.0, part)


@pytest.mark.parametrize("x0", [None, (math.pi, math.pi)])
def test_pipeline_on_example_operator(x0):
    # recovered critical order must not fall below the direct one by more than delta * kappa
    from anisofl.cli import example_p_coefficient, example_p_symbol

    lat = FrequencyLattice((32, 32))
    part = build_partition(lat, M2)
    P = example_p_symbol(1, 1, 2.0, 2.0, lat)
    u = example_p_coefficient(3, 7, 1.0, 1.0, lat)
    sec = ConicSector((0.0, 1.0), 0.25, 0.5)
    out = regularity_pipeline(P, u, x0, sec, 2.0, 4, 0.25, math.inf, M2, 1.0, part)
    assert out["kappa"] == 2.0
    assert out["pipeline"]["score"] >= out["direct"]["score"] - 0.25 * out["kappa"]
    if x0 is None:
        assert out["residual"] < 1e-3
