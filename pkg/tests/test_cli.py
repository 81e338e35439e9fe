import json
import math
import time

import numpy as np
import pytest

from anisofl.cli import (
    UsageError,
    effective_config,
    example_p_coefficient,
    example_p_field,
    example_p_symbol,
    main,
    parabola_distance,
    run_suite,
)
from anisofl.lattice import FrequencyLattice

LAT = FrequencyLattice((64, 64))


@pytest.mark.parametrize("k1,k2,a1,a2", [(1, 1, 2.0, 2.0), (3, 7, 1.0, 1.0), (5, 9, 1.5, 0.5)])
def test_coefficient_at_origin(k1, k2, a1, a2):
    c = example_p_coefficient(k1, k2, a1, a2, LAT).freq()
    assert math.isclose(c[0, 0].real, 1 / (a1 ** (k1 + 1) * a2 ** (k2 + 1)), rel_tol=1e-14)


@pytest.mark.parametrize("k1", [1, 2, 4])
def test_coefficient_axis_decay(k1):
    c = example_p_coefficient(k1, 1, 1.0, 1.0, LAT).freq()
    k = np.arange(8, 31)
    slope = np.polyfit(np.log(k), np.log(np.abs(c[k, 0])), 1)[0]
    assert abs(slope + (k1 + 1)) < 0.1


def test_coefficient_validation():
    with pytest.raises(ValueError):
        example_p_coefficient(0, 1, 1.0, 1.0, LAT)
    with pytest.raises(ValueError):
        example_p_coefficient(1, 1, -1.0, 1.0, LAT)
    with pytest.raises(ValueError):
        example_p_coefficient(1, 1, 1.0, 1.0, FrequencyLattice((16,)))


def test_symbol_modulus_identity():
    lat = FrequencyLattice((16, 16))
    c = example_p_field(1, 1, 2.0, 2.0, lat)
    P = example_p_symbol(1, 1, 2.0, 2.0, lat).tensor(lat)
    xi = lat.freq_grid().astype(float)
    expected = c[:, :, None, None] ** 2 * xi[..., 0] ** 2 + (xi[..., 1] ** 2 - xi[..., 0]) ** 2
    assert np.max(np.abs(np.abs(P) ** 2 - expected)) < 1e-9 * np.max(expected)
    # on the parabola only the coefficient term survives
    t = np.arange(-3, 4)
    pts = np.stack([t ** 2, t], axis=-1).astype(float)
    vals = example_p_symbol(1, 1, 2.0, 2.0, lat).slices(lat, pts)
    assert np.allclose(np.abs(vals), np.abs(c)[None] * (t ** 2)[:, None, None], atol=1e-12)


def test_parabola_distance():
    d = parabola_distance((1, 2), np.array([[2 ** -0.5, 2 ** -0.25], [1.0, 0.0], [4.0, -2.0]]))
    assert d[0] < 1e-12 and d[2] < 1e-12 and d[1] > 0.1


def test_empty_suites(tmp_path):
    code, manifest = run_suite({"suites": []}, str(tmp_path / "art"))
    assert code == 0 and manifest["suites"] == {}
    assert not (tmp_path / "art").exists()


def test_unknown_suite():
    with pytest.raises(UsageError):
        effective_config({"suites": ["nonsense"]})
    with pytest.raises(UsageError):
        effective_config({"suites": ["partition"], "partition": 3})


def test_partition_suite_fast(tmp_path):
    t0 = time.perf_counter()
    code, manifest = run_suite({"suites": ["partition"]}, str(tmp_path))
    assert time.perf_counter() - t0 < 10
    assert code == 0 and manifest["passed"]
    assert (tmp_path / "manifest.json").exists()
    assert json.loads((tmp_path / "manifest.json").read_text())["passed"] is True


def test_main_subcommands(capsys):
    for argv in (["--json", "norm"], ["decompose", "--json"], ["--json", "quantize"], ["--json", "probe"],
                 ["--json", "split", "--lattice", "32x32"], ["--json", "parametrix", "--N-terms", "2"]):
        assert main(argv) == 0
        out = json.loads(capsys.readouterr().out)
        assert isinstance(out, dict) and out


def test_main_example_p(capsys):
    assert main(["--json", "example-p", "--k1", "1", "--k2", "1", "--a1", "2", "--a2", "2"]) == 0
    out = json.loads(capsys.readouterr().out)
    assert out["elliptic_inside_quadrant"] is True
    assert math.isclose(out["c_hat_origin"], 1 / 16, rel_tol=1e-14)


def test_main_suite_cli(tmp_path, capsys):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"suites": ["partition"], "partition": {"lattices": ["32x32"]}}))
    assert main(["suite", "--config", str(cfg), "--out", str(tmp_path / "a"), "--json"]) == 0
    assert json.loads(capsys.readouterr().out)["passed"] is True
    bad = tmp_path / "bad.json"
    bad.write_text("{")
    with pytest.raises(SystemExit):
        main(["suite", "--config", str(bad), "--out", str(tmp_path / "b")])
    with pytest.raises(SystemExit):
        main(["suite", "--suites", "nonsense", "--out", str(tmp_path / "c")])
