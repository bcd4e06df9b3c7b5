import json
import os

import numpy as np
import pytest

from perilame.cli import main, parse_config
from perilame.errors import ConfigError

MINIMAL = {
    "mode": "solve-linear",
    "cell": [1.0, 1.0],
    "omega": 1.0,
    "curve": {"kind": "circle", "center": [0.5, 0.5], "radius": 0.25},
    "robin": {
        "a": [[1.0, 0.0], [0.0, 1.0]],
        "b": [[-1.0, 0.0], [0.0, -1.0]],
        "g": [-0.3, 0.7],
    },
}


def _write(tmp_path, cfg, name="run.json"):
    path = tmp_path / name
    path.write_text(json.dumps(cfg))
    return str(path)


def _read_summary(out_dir):
    summary = {}
    with open(os.path.join(out_dir, "summary.txt")) as fh:
        for line in fh:
            key, _, value = line.strip().partition("=")
            summary[key] = value
    return summary


def test_parse_minimal_config_resolves_defaults(tmp_path):
    config = parse_config(_write(tmp_path, MINIMAL))
    assert config.nodes == 128
    assert config.lattice_tol == 1e-10
    assert config.mode == "solve-linear"
    echo = config.echo()
    assert echo["nodes"] == 128 and echo["lattice_tol"] == 1e-10


def test_omega_bound_rejected(tmp_path):
    bad = dict(MINIMAL, omega=-2.0)
    with pytest.raises(ConfigError, match="omega must exceed 0"):
        parse_config(_write(tmp_path, bad))


def test_unknown_field_rejected(tmp_path):
    bad = dict(MINIMAL, lattice_tolerance=1e-8)
    with pytest.raises(ConfigError, match="lattice_tolerance"):
        parse_config(_write(tmp_path, bad))
    bad2 = dict(MINIMAL)
    bad2["curve"] = dict(MINIMAL["curve"], radiuss=0.2)
    with pytest.raises(ConfigError, match="radiuss"):
        parse_config(_write(tmp_path, bad2))


def test_config_roundtrip(tmp_path):
    config = parse_config(_write(tmp_path, MINIMAL))
    echoed = config.echo()
    path = tmp_path / "echo.json"
    path.write_text(json.dumps(echoed))
    config2 = parse_config(str(path))
    assert config2.echo() == echoed
    assert config2.fingerprint() == config.fingerprint()


def test_constant_solution_run(tmp_path):
    cfg = dict(MINIMAL, nodes=64, out_dir=str(tmp_path / "out"))
    code = main(["--config", _write(tmp_path, cfg)])
    assert code == 0
    summary = _read_summary(cfg["out_dir"])
    c = np.array([float(v) for v in summary["c"].strip("()").split(",")])
    assert np.max(np.abs(c - [0.3, -0.7])) < 1e-10
    assert float(summary["mu_sup_norm"]) < 1e-10
    for name in ("density.csv", "field.csv", "config.echo.json"):
        assert os.path.exists(os.path.join(cfg["out_dir"], name))


def test_rejected_data_exit_code(tmp_path):
    cfg = dict(MINIMAL, out_dir=str(tmp_path / "out2"))
    cfg["robin"] = dict(cfg["robin"], b=[[1.0, 0.0], [0.0, 1.0]])
    code = main(["--config", _write(tmp_path, cfg)])
    assert code == 2


def test_cli_overrides(tmp_path):
    cfg = dict(MINIMAL, nodes=64, out_dir=str(tmp_path / "out3"))
    code = main(["--config", _write(tmp_path, cfg), "--nodes", "32", "--tol", "1e-8"])
    assert code == 0
    echoed = json.load(open(os.path.join(cfg["out_dir"], "config.echo.json")))
    assert echoed["nodes"] == 32
    assert echoed["lattice_tol"] == 1e-8


def test_density_csv_schema(tmp_path):
    cfg = dict(MINIMAL, nodes=64, out_dir=str(tmp_path / "out4"))
    assert main(["--config", _write(tmp_path, cfg)]) == 0
    lines = open(os.path.join(cfg["out_dir"], "density.csv")).read().splitlines()
    assert lines[0].startswith("# fingerprint=")
    assert lines[1] == "t,x1,x2,mu1,mu2"
    assert len(lines) == 2 + 64


def test_field_csv_masks_hole(tmp_path):
    cfg = dict(MINIMAL, nodes=64, grid=[12, 12], out_dir=str(tmp_path / "out5"))
    assert main(["--config", _write(tmp_path, cfg)]) == 0
    lines = open(os.path.join(cfg["out_dir"], "field.csv")).read().splitlines()
    assert lines[1] == "x1,x2,u1,u2,warning"
    rows = [line.split(",") for line in lines[2:]]
    assert 0 < len(rows) < 144  # hole interior omitted
    for row in rows:
        p = np.array([float(row[0]), float(row[1])])
        assert np.linalg.norm(p - [0.5, 0.5]) > 0.25 - 1e-9
        assert row[4] in ("0", "1")
    # constant solution: u == c everywhere outside the hole
    for row in rows:
        assert abs(float(row[2]) - 0.3) < 1e-9
        assert abs(float(row[3]) + 0.7) < 1e-9


def test_determinism(tmp_path):
    cfg1 = dict(MINIMAL, nodes=64, out_dir=str(tmp_path / "a"))
    cfg2 = dict(MINIMAL, nodes=64, out_dir=str(tmp_path / "b"))
    assert main(["--config", _write(tmp_path, cfg1, "a.json")]) == 0
    assert main(["--config", _write(tmp_path, cfg2, "b.json")]) == 0
    sa = open(os.path.join(cfg1["out_dir"], "density.csv")).read()
    sb = open(os.path.join(cfg2["out_dir"], "density.csv")).read()
    assert sa == sb
    a = _read_summary(cfg1["out_dir"])
    b = _read_summary(cfg2["out_dir"])
    for key in ("c", "mu_sup_norm", "residual_on_node"):
        assert a[key] == b[key]


def test_green_eval_mode(tmp_path):
    cfg = {
        "mode": "green-eval",
        "cell": [1.0, 1.0],
        "omega": 1.0,
        "curve": {"kind": "circle", "center": [0.5, 0.5], "radius": 0.25},
        "green": {"source": [0.5, 0.5], "load": [1.0, 0.0]},
        "grid": [8, 8],
        "out_dir": str(tmp_path / "green"),
    }
    assert main(["--config", _write(tmp_path, cfg)]) == 0
    lines = open(os.path.join(cfg["out_dir"], "field.csv")).read().splitlines()
    assert lines[1] == "x1,x2,u1,u2,warning"
    assert len(lines) > 2


def test_nonlinear_mode(tmp_path):
    cfg = {
        "mode": "solve-nonlinear",
        "cell": [1.0, 1.0],
        "omega": 1.0,
        "nodes": 64,
        "curve": {"kind": "circle", "center": [0.5, 0.5], "radius": 0.25},
        "model": {
            "kind": "affine",
            "M": [[-1.0, 0.0], [0.0, -1.0]],
            "h": [-0.3, 0.7],
        },
        "out_dir": str(tmp_path / "nl"),
    }
    assert main(["--config", _write(tmp_path, cfg)]) == 0
    summary = _read_summary(cfg["out_dir"])
    # affine model with M=-I, h=g matches the linear constant solution
    c = np.array([float(v) for v in summary["c"].strip("()").split(",")])
    assert np.max(np.abs(c - [-0.3, 0.7])) < 1e-10
    assert "iterations" in summary


def test_nonlinear_saturating_mode(tmp_path):
    cfg = {
        "mode": "solve-nonlinear",
        "cell": [1.0, 1.0],
        "omega": 1.0,
        "nodes": 64,
        "curve": {"kind": "circle", "center": [0.5, 0.5], "radius": 0.25},
        "model": {"kind": "saturating", "h": [0.3, -0.2], "kappa": -0.8},
        "out_dir": str(tmp_path / "sat"),
    }
    assert main(["--config", _write(tmp_path, cfg)]) == 0
    summary = _read_summary(cfg["out_dir"])
    assert float(summary["residual_on_node"]) < 1e-10


def test_verify_mode_quick(tmp_path, monkeypatch):
    # run the suite on a cheap subset through the CLI plumbing
    import perilame.cli as cli

    def quick_suite(seed=0):
        from perilame.verify import run_property_suite as full

        return full(names=["green-evenness", "green-matrix-symmetry"], seed=seed)

    monkeypatch.setattr(cli, "run_property_suite", quick_suite)
    cfg = {
        "mode": "verify",
        "cell": [1.0, 1.0],
        "omega": 1.0,
        "out_dir": str(tmp_path / "verify"),
    }
    assert main(["--config", _write(tmp_path, cfg)]) == 0
    lines = open(os.path.join(cfg["out_dir"], "reports.csv")).read().splitlines()
    assert lines[1] == "property,anchor,max_error,tolerance,pass"
    assert all(line.endswith(",1") for line in lines[2:])


def test_missing_config_rejected():
    assert main(["--config", "/nonexistent/path.json"]) == 2
