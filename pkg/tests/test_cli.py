"""CLI surface: exit codes, run directories, manifests, reproducibility."""

import json
import math
import os

import numpy as np
import pytest

from snls.cli import main, render_svg_plot
from snls.config import (
    config_hash,
    config_to_dict,
    load_config,
    parse_config_dict,
)
from snls.errors import ConfigError

VALID_DOC = {
    "d": 1,
    "alpha": 3,
    "gamma": 1,
    "lambda": 1,
    "T": 0.25,
    "dt": 1.0 / 64.0,
    "grid": {"n": 64, "L": 32.0},
    "initial_condition": {"kind": "gaussian_bump", "amplitude": 1.0, "width": 2.0},
    "noise": {"coefficients": [{"kind": "constant", "value": 0.3}]},
    "scheme": "splitstep",
    "seed": 5,
}


def write_config(tmp_path, doc, name="config.json"):
    path = tmp_path / name
    path.write_text(json.dumps(doc))
    return str(path)


# -- config ingestion --------------------------------------------------------


def test_parse_valid_config():
    cfg = parse_config_dict(VALID_DOC)
    assert cfg.params.d == 1 and cfg.params.lam == 1
    assert cfg.grid.n == 64
    assert cfg.n_steps == 16


def test_config_requires_physical_keys():
    for key in ("d", "alpha", "gamma", "lambda", "T", "initial_condition", "noise"):
        doc = dict(VALID_DOC)
        del doc[key]
        with pytest.raises(ConfigError):
            parse_config_dict(doc)


def test_config_rejects_unknown_keys():
    doc = dict(VALID_DOC)
    doc["alfa"] = 2
    with pytest.raises(ConfigError):
        parse_config_dict(doc)


def test_config_rational_strings():
    doc = dict(VALID_DOC)
    doc["alpha"] = "7/2"
    doc["gamma"] = "3/2"
    cfg = parse_config_dict(doc)
    assert str(cfg.params.alpha) == "7/2"
    assert str(cfg.params.gamma) == "3/2"


def test_config_roundtrip_is_identity():
    cfg = parse_config_dict(VALID_DOC)
    echo = config_to_dict(cfg)
    cfg2 = parse_config_dict(echo)
    assert cfg2 == cfg
    assert config_hash(cfg2) == config_hash(cfg)


def test_config_roundtrip_randomized():
    rng = np.random.default_rng(0)
    for _ in range(25):
        doc = dict(VALID_DOC)
        doc["alpha"] = f"{int(rng.integers(9, 40))}/8"
        doc["gamma"] = f"{int(rng.integers(8, 24))}/8"
        doc["T"] = float(rng.choice([0.25, 0.5, 1.0]))
        doc["dt"] = doc["T"] / int(rng.choice([16, 32, 64]))
        doc["seed"] = int(rng.integers(0, 1000))
        doc["truncation_level"] = float(rng.choice([2.0, 8.0, math.inf]))
        if math.isinf(doc["truncation_level"]):
            doc["truncation_level"] = "inf"
        try:
            cfg = parse_config_dict(doc)
        except ConfigError:
            continue  # parameter outside the admissible range: fine
        assert parse_config_dict(config_to_dict(cfg)) == cfg


def test_load_config_missing_file(tmp_path):
    with pytest.raises(FileNotFoundError):
        load_config(str(tmp_path / "nope.json"))


# -- exponents subcommand ----------------------------------------------------


def test_cli_exponents_single(capsys):
    assert main(["exponents", "--d", "1", "--alpha", "3", "--gamma", "3/2"]) == 0
    out = capsys.readouterr().out.strip().splitlines()
    assert out[0].startswith("d,alpha,gamma,q,q_tilde")
    assert out[1] == "1,3,3/2,8,12,1/2,3/4,2/3,1/3,11/10,false,false"


def test_cli_exponents_gamma_one_flags_degenerate(capsys):
    assert main(["exponents", "--d", "2", "--alpha", "3", "--gamma", "1"]) == 0
    row = capsys.readouterr().out.strip().splitlines()[1].split(",")
    assert row[4] == "inf"  # q_tilde at the trivial endpoint
    assert row[10] == "true"  # critical (alpha = 1 + 4/d)
    assert row[11] == "true"  # theta_global degenerate


def test_cli_exponents_invalid_params(capsys):
    assert main(["exponents", "--d", "1", "--alpha", "6", "--gamma", "1"]) == 2
    err = capsys.readouterr().err
    assert "alpha" in err


def test_cli_exponents_table_file(tmp_path, capsys):
    table = tmp_path / "table.csv"
    table.write_text("d,alpha,gamma\n1,2,1\n2,2,3/2\n")
    assert main(["exponents", "--table-file", str(table)]) == 0
    out = capsys.readouterr().out.strip().splitlines()
    assert len(out) == 3


# -- simulate subcommand -----------------------------------------------------


def test_cli_simulate_run_directory(tmp_path, capsys):
    cfg_path = write_config(tmp_path, VALID_DOC)
    out_dir = str(tmp_path / "run")
    assert main(["simulate", cfg_path, "--out", out_dir, "--plot"]) == 0
    names = sorted(os.listdir(out_dir))
    assert names == ["manifest.json", "plot.svg", "report.json", "trajectory.csv"]
    manifest = json.loads((tmp_path / "run" / "manifest.json").read_text())
    assert sorted(manifest["outputs"]) == ["plot.svg", "report.json", "trajectory.csv"]
    for rec in manifest["outputs"].values():
        assert len(rec["sha256"]) == 64 and rec["bytes"] > 0
    report = json.loads((tmp_path / "run" / "report.json").read_text())
    assert report["tau"] == 0.25
    assert report["config_hash"] == manifest["config_hash"]
    header = (tmp_path / "run" / "trajectory.csv").read_text().splitlines()[0]
    assert header == "t,mass,z_component_1,z_component_2,z_total"


def test_cli_simulate_reproducible_csv(tmp_path):
    cfg_path = write_config(tmp_path, VALID_DOC)
    assert main(["simulate", cfg_path, "--out", str(tmp_path / "a")]) == 0
    # re-run from the echoed config, as the manifest instructs
    manifest = json.loads((tmp_path / "a" / "manifest.json").read_text())
    echo_path = write_config(tmp_path, manifest["config"], "echo.json")
    assert main(["simulate", echo_path, "--out", str(tmp_path / "b")]) == 0
    a = (tmp_path / "a" / "trajectory.csv").read_bytes()
    b = (tmp_path / "b" / "trajectory.csv").read_bytes()
    assert a == b
    ma = json.loads((tmp_path / "a" / "manifest.json").read_text())
    mb = json.loads((tmp_path / "b" / "manifest.json").read_text())
    assert ma["outputs"]["trajectory.csv"]["sha256"] == mb["outputs"]["trajectory.csv"]["sha256"]


def test_cli_simulate_missing_config_exit_4(tmp_path, capsys):
    assert main(["simulate", str(tmp_path / "absent.json"), "--out", str(tmp_path / "x")]) == 4
    err = capsys.readouterr().err
    assert json.loads(err.strip())["error"] == "IOError"


def test_cli_simulate_invalid_alpha_exit_2(tmp_path, capsys):
    doc = dict(VALID_DOC)
    doc["alpha"] = 6  # above 1 + 4/d for d = 1
    cfg_path = write_config(tmp_path, doc)
    assert main(["simulate", cfg_path, "--out", str(tmp_path / "x")]) == 2
    err = json.loads(capsys.readouterr().err.strip())
    assert err["error"] == "ConfigError"
    assert "alpha" in err["message"]


def test_cli_simulate_no_contraction_exit_3(tmp_path, capsys):
    doc = dict(VALID_DOC)
    doc["lambda"] = -1
    doc["scheme"] = "picard"
    doc["picard_max_iters"] = 8
    doc["initial_condition"] = {"kind": "gaussian_bump", "amplitude": 80.0, "width": 0.8}
    cfg_path = write_config(tmp_path, doc)
    assert main(["simulate", cfg_path, "--out", str(tmp_path / "x")]) == 3
    err = json.loads(capsys.readouterr().err.strip())
    assert err["error"] in ("NoContraction", "MaxItersExceeded")


def test_cli_scheme_and_seed_overrides(tmp_path):
    cfg_path = write_config(tmp_path, VALID_DOC)
    assert main(["simulate", cfg_path, "--scheme", "picard", "--seed", "9", "--out", str(tmp_path / "o")]) == 0
    report = json.loads((tmp_path / "o" / "report.json").read_text())
    assert report["scheme"] == "picard"
    assert report["config"]["seed"] == 9


# -- ensemble subcommand -----------------------------------------------------


def test_cli_ensemble_summary(tmp_path):
    cfg_path = write_config(tmp_path, VALID_DOC)
    out = str(tmp_path / "ens")
    assert main(["ensemble", cfg_path, "--paths", "4", "--out", out]) == 0
    doc = json.loads((tmp_path / "ens" / "summary.json").read_text())
    assert doc["n_paths"] == 4 and doc["n_failed"] == 0
    assert 0.0 <= doc["tau_equals_T_frequency"] <= 1.0


def test_cli_ensemble_keep_paths(tmp_path):
    cfg_path = write_config(tmp_path, VALID_DOC)
    out = str(tmp_path / "kept")
    assert main(["ensemble", cfg_path, "--paths", "3", "--keep-paths", "--out", out]) == 0
    manifest = json.loads((tmp_path / "kept" / "manifest.json").read_text())
    per_path = [k for k in manifest["outputs"] if "paths-" in k]
    assert len(per_path) == 3
    sub = per_path[0].split(os.sep)[0]
    assert sub == f"paths-{manifest['config_hash'][:12]}"
    doc = json.loads((tmp_path / "kept" / per_path[0]).read_text())
    assert doc["ok"] is True and "report" in doc
    # --keep-paths is a per-ensemble feature, rejected alongside --levels
    assert main(["ensemble", cfg_path, "--paths", "2", "--levels", "4,8", "--keep-paths", "--out", out]) == 2


def test_cli_ensemble_levels(tmp_path):
    cfg_path = write_config(tmp_path, VALID_DOC)
    out = str(tmp_path / "lev")
    assert main(["ensemble", cfg_path, "--paths", "3", "--levels", "4,8", "--scheme", "picard", "--out", out]) == 0
    lines = (tmp_path / "lev" / "levels.csv").read_text().splitlines()
    assert lines[0].startswith("level,mean_yt_norm")
    assert len(lines) == 3
    manifest = json.loads((tmp_path / "lev" / "manifest.json").read_text())
    assert sorted(manifest["outputs"]) == ["levels.csv", "summary.json"]


def test_file_based_field_specs(tmp_path):
    """Initial conditions and noise coefficients can come from binary field
    files in the serialization layout."""
    import snls
    from snls.solver import materialize

    grid = snls.Grid(d=1, n=64, L=32.0)
    ic = snls.gaussian_field(grid, 1.3, 2.0)
    coeff = snls.gaussian_field(grid, 0.4, 3.0)
    ic_path = tmp_path / "ic.field"
    coeff_path = tmp_path / "coeff.field"
    snls.grid_field.write_field(ic_path, ic)
    snls.grid_field.write_field(coeff_path, coeff)
    doc = dict(VALID_DOC)
    doc["initial_condition"] = {"kind": "file", "path": str(ic_path)}
    doc["noise"] = {"coefficients": [{"kind": "file", "path": str(coeff_path)}]}
    cfg = parse_config_dict(doc)
    _, model, u0 = materialize(cfg)
    assert np.array_equal(u0.values, ic.values)
    assert np.array_equal(model.coeffs[0], coeff.values)
    assert model.conservative


# -- verify subcommand -------------------------------------------------------


def test_cli_verify_exponents_suite(tmp_path, capsys):
    report_path = str(tmp_path / "verify.json")
    assert main(["verify", "--suite", "exponents", "--json", report_path]) == 0
    out = capsys.readouterr().out
    assert "PASS exponents/scaling-identity-exact" in out
    assert "PASS overall" in out
    doc = json.loads((tmp_path / "verify.json").read_text())
    assert doc["passed"] is True


def test_cli_verify_truncation_suite(capsys):
    assert main(["verify", "--suite", "truncation"]) == 0
    assert "window-chaining-identity" in capsys.readouterr().out


# -- svg plotting ------------------------------------------------------------


def test_render_svg_plot_structure():
    svg = render_svg_plot([0.0, 0.5, 1.0], {"mass": [1.0, 1.0, 1.0], "z_total": [0.0, 0.4, 0.9]}, "demo")
    assert svg.startswith("<svg")
    assert svg.count("<polyline") == 2
    assert "demo" in svg
    # deterministic output
    assert svg == render_svg_plot([0.0, 0.5, 1.0], {"mass": [1.0, 1.0, 1.0], "z_total": [0.0, 0.4, 0.9]}, "demo")
