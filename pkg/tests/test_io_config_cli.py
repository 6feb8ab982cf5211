import json
import math
from pathlib import Path

import numpy as np
import pytest

from wignerchaos import __version__, io
from wignerchaos.cli import main
from wignerchaos.config import ConfigError, load_config, parse_config, preset_names
from wignerchaos.phase_space import GaussianSpec, PhaseSpaceGrid, make_gaussian

FIXTURES = Path(__file__).parent / "fixtures"

SMALL = """\
name: small
grid: {nx: 128, np: 128, x_extent: [-10.0, 10.0]}
state: {kind: gaussian, x0: 1.0, p0: 0.0}
potential: {coefficients: [0.0, 0.0, 0.5]}
environment: {diffusion: 0.02}
evolution: {dt: 0.05, t_max: 30.0, diagnostics_stride: 4}
diagnostics:
  dynamical_time: 6.283185307179586
  min_dynamical_times: 1.0
  lyapunov: {method: value, value: 0.0}
"""


# snapshots and CSV


def test_snapshot_round_trip(tmp_path):
    g = PhaseSpaceGrid(32, 64, (-5.0, 5.0), (-5.0, 5.0), hbar=0.5)
    w = make_gaussian(GaussianSpec(0.3, -0.2, 0.6, 0.7, 0.1), g, time=1.25)
    path = io.write_snapshot(tmp_path / "s.wig", w)
    back = io.read_snapshot(path)
    assert np.array_equal(back.values, w.values)
    assert back.grid == g and back.time == 1.25
    assert path.stat().st_size == io.HEADER.size + 8 * 32 * 64
    assert path.read_bytes()[:4] == b"WIG1"


def test_snapshot_rejects_corruption(tmp_path):
    g = PhaseSpaceGrid(64, 64, (-8.0, 8.0))
    path = io.write_snapshot(tmp_path / "s.wig", make_gaussian(GaussianSpec(0, 0, 1.0, 1.0, 0), g))
    data = path.read_bytes()
    (tmp_path / "bad.wig").write_bytes(b"XXXX" + data[4:])
    (tmp_path / "short.wig").write_bytes(data[:-8])
    with pytest.raises(io.SnapshotFormatError):
        io.read_snapshot(tmp_path / "bad.wig")
    with pytest.raises(io.SnapshotFormatError):
        io.read_snapshot(tmp_path / "short.wig")


def test_series_csv_round_trip_is_exact(tmp_path):
    rows = [(0.1, 1 / 3, math.pi), (0.2, 2e-300, -1.5)]
    io.write_series_csv(tmp_path / "s.csv", ["t", "a", "b"], rows)
    back = io.read_series_csv(tmp_path / "s.csv")
    assert list(back) == ["t", "a", "b"]
    assert back["a"][0] == 1 / 3 and back["b"][0] == math.pi and back["a"][1] == 2e-300


def test_json_non_finite_becomes_null(tmp_path):
    io.write_json(tmp_path / "x.json", {"a": math.inf, "b": [math.nan, 1.0], "c": np.float64(2.0)})
    assert io.read_json(tmp_path / "x.json") == {"a": None, "b": [None, 1.0], "c": 2.0}


def test_marginals_and_moments_csv(tmp_path):
    g = PhaseSpaceGrid(64, 64, (-8.0, 8.0))
    w = make_gaussian(GaussianSpec(1.0, 0.0, 1.0, 1.0, 0), g)
    io.write_marginals_csv(tmp_path / "m.csv", w)
    io.write_moments_csv(tmp_path / "mo.csv", w)
    text = (tmp_path / "m.csv").read_text().splitlines()
    assert text[0] == "axis,coordinate,density" and len(text) == 1 + 128
    assert "mean_x" in (tmp_path / "mo.csv").read_text()


def test_schema_documents_every_series_column():
    from importlib import resources

    from wignerchaos.evolution import RunRecord

    schema = json.loads(resources.files("wignerchaos").joinpath("schema", "columns.json").read_text())
    documented = set(schema["series.csv"])
    assert documented == set(RunRecord.COLUMNS)


# configuration


def test_minimal_config_fills_defaults():
    cfg = parse_config("state: {sigma_x: 1.0}\n")
    assert cfg.grid.nx == 256 and cfg.evolution.bracket == "moyal_exact"
    assert cfg.gaussian_spec().sigma_p == pytest.approx(0.5)
    assert cfg.build_evolution().dt > 0


def test_empty_config_is_valid():
    assert parse_config("").name == "run"


def test_gamma_with_direct_diffusion_rejected():
    with pytest.raises(ConfigError, match=r"line 2: environment\.diffusion: .*gamma = 0"):
        parse_config("environment:\n  diffusion: 0.1\n  gamma: 0.5\n")


def test_unknown_key_rejected_with_line():
    with pytest.raises(ConfigError, match=r"line 3: grid\.nz: unknown key 'nz'"):
        parse_config("name: x\ngrid:\n  nz: 64\n")


def test_wrong_type_rejected_with_line():
    with pytest.raises(ConfigError, match=r"line 2: evolution\.t_max"):
        parse_config("evolution:\n  t_max: soon\n")


def test_invalid_values_rejected():
    with pytest.raises(ConfigError, match="bracket"):
        parse_config("evolution: {bracket: 'truncated(0)'}\n")
    with pytest.raises(ConfigError, match="state"):
        parse_config("state: {sigma_x: 0.1, sigma_p: 0.1}\n")
    with pytest.raises(ConfigError, match="invalid YAML"):
        parse_config("grid: [unclosed\n")


def test_preset_expansion_matches_fixture():
    expected = json.loads((FIXTURES / "inverted_oscillator_expanded.json").read_text())
    assert load_config("inverted_oscillator").to_dict() == expected
    assert parse_config("preset: inverted_oscillator\n").to_dict() == expected


def test_preset_override():
    cfg = parse_config("preset: inverted_oscillator\nenvironment: {diffusion: 0.2}\n")
    assert cfg.environment.diffusion == 0.2 and cfg.grid.nx == 512


@pytest.mark.parametrize("name", preset_names())
def test_presets_parse_and_round_trip(name):
    cfg = load_config(name)
    assert parse_config(cfg.to_yaml()).to_dict() == cfg.to_dict()


def test_with_value_sets_nested_fields():
    cfg = parse_config(SMALL)
    assert cfg.with_value("environment.diffusion", 0.5).environment.diffusion == 0.5
    assert cfg.environment.diffusion == 0.02


# command line


@pytest.fixture
def small_config(tmp_path):
    path = tmp_path / "small.yaml"
    path.write_text(SMALL)
    return path


def test_cli_run_writes_artifacts(tmp_path, small_config, capsys):
    assert main(["run", str(small_config), "-o", str(tmp_path / "out"), "--snapshots"]) == 0
    d = tmp_path / "out" / "small"
    for name in ("manifest.json", "series.csv", "rate.csv", "verdict.json", "lyapunov.json", "config.yaml",
                 "marginals_final.csv", "moments_final.csv"):
        assert (d / name).exists(), name
    manifest = io.read_json(d / "manifest.json")
    assert manifest["version"] == __version__
    assert manifest["config"]["name"] == "small"
    assert manifest["snapshots"] and (d / manifest["snapshots"][0]["path"]).exists()
    assert io.read_json(d / "verdict.json")["version"] == __version__
    assert "verdict" in capsys.readouterr().out


def test_cli_run_is_deterministic(tmp_path, small_config):
    for k in ("a", "b"):
        assert main(["run", str(small_config), "-o", str(tmp_path / k)]) == 0
    for name in ("series.csv", "verdict.json", "rate.csv", "marginals_final.csv"):
        assert (tmp_path / "a" / "small" / name).read_bytes() == (tmp_path / "b" / "small" / name).read_bytes()


def test_cli_report_reproduces_verdict(tmp_path, small_config, capsys):
    main(["run", str(small_config), "-o", str(tmp_path)])
    stored = io.read_json(tmp_path / "small" / "verdict.json")
    assert main(["report", str(tmp_path / "small")]) == 0
    report = io.read_json(tmp_path / "small" / "report.json")
    assert report["reproduces_stored_verdict"] is True
    assert report["verdict"]["classification"] == stored["classification"]
    assert "tau_D" in report["timescales"]


def test_cli_output_root_from_environment(tmp_path, small_config, monkeypatch):
    monkeypatch.setenv("WIGNERCHAOS_OUTPUT", str(tmp_path / "envroot"))
    assert main(["run", str(small_config)]) == 0
    assert (tmp_path / "envroot" / "small" / "manifest.json").exists()


def test_cli_config_error_exit_code(tmp_path, capsys):
    bad = tmp_path / "bad.yaml"
    bad.write_text("grid:\n  nz: 3\n")
    assert main(["run", str(bad), "-o", str(tmp_path)]) == 2
    assert "line 2" in capsys.readouterr().err
    assert main(["run", str(tmp_path / "missing.yaml"), "-o", str(tmp_path)]) == 2


def test_cli_numerical_abort_exit_code(tmp_path):
    cfg = tmp_path / "leak.yaml"
    cfg.write_text(SMALL.replace("x0: 1.0, p0: 0.0", "x0: 1.0, p0: 2.0")
                   .replace("coefficients: [0.0, 0.0, 0.5]", "coefficients: [0.0]"))
    assert main(["run", str(cfg), "-o", str(tmp_path)]) == 3
    manifest = io.read_json(tmp_path / "small" / "manifest.json")
    assert "edge" in manifest["aborted"]


def test_cli_require_verdict_exit_code(tmp_path):
    cfg = tmp_path / "short.yaml"
    cfg.write_text(SMALL.replace("t_max: 30.0", "t_max: 2.0"))
    assert main(["run", str(cfg), "-o", str(tmp_path / "a")]) == 0
    assert main(["run", str(cfg), "-o", str(tmp_path / "b"), "--require-verdict"]) == 4


def test_cli_sweep(tmp_path, small_config):
    assert main(["sweep", str(small_config), "--axis", "D", "--values", "0.01,0.02", "--jobs", "2",
                 "-o", str(tmp_path)]) == 0
    root = tmp_path / "small_sweep_D"
    rows = (root / "sweep.csv").read_text().splitlines()
    assert rows[0].startswith("axis,value,plateau_rate") and len(rows) == 3
    assert (root / "D_0.01" / "manifest.json").exists() and (root / "D_0.02" / "verdict.json").exists()


def test_cli_sweep_rejects_bad_values(tmp_path, small_config):
    assert main(["sweep", str(small_config), "--axis", "D", "--values", "a,b", "-o", str(tmp_path)]) == 2


def test_cli_lyapunov(tmp_path, capsys):
    out = tmp_path / "ly.json"
    assert main(["lyapunov", "inverted_oscillator", "--t-total", "1000", "--dt", "0.001", "--out", str(out)]) == 0
    data = json.loads(out.read_text())
    assert data["exponents"][0] == pytest.approx(1.0, abs=1e-3)
    assert data["dt"] == 0.001 and data["averaging_time"] == pytest.approx(1000.0)
    assert json.loads(capsys.readouterr().out) == data
