"""Experiment runner and command-line interface."""

import csv
import json
import os

import numpy as np
import pytest

from dualnash import Box, ConfigError, GameSpec, QuadraticOperator, SumSquares
from dualnash.cli import main
from dualnash.experiments import build_logsumexp_game, build_quadratic_game, build_toy_game
from dualnash.runner import run_experiment

SENSOR_CFG = {
    "id": "sensor-table",
    "experiment": "sensor",
    "params": {"n_sensors": 10},
    "methods": ["alg1", "pgd", "sgd"],
    "solver": {"schedule": "invsqrt:0.0637", "iters": 200, "ttol": 0, "sigma_init": "zero"},
    "method_options": {"pgd": {"schedule": "constant:0.01", "sigma_init": "natural"},
                       "sgd": {"schedule": "constant:0.01", "sigma_init": "natural"}},
    "inits": {"kind": "sensor", "count": 3, "seed": 0},
    "checkpoints": [5, 50, 200],
}


def _files(root):
    out = {}
    for d, _, names in os.walk(root):
        for n in names:
            p = os.path.join(d, n)
            with open(p, "rb") as fh:
                out[os.path.relpath(p, root)] = fh.read()
    return out


# ---------------------------------------------------------------- runner
def test_sensor_report_has_a_full_mle_table(tmp_path):
    rep = run_experiment(SENSOR_CFG, out_dir=str(tmp_path / "a"))
    mle = rep.tables["mle"]
    assert sorted(mle) == ["alg1", "pgd", "sgd"]
    for rows in mle.values():
        assert np.asarray(rows).shape == (3, 3)
    assert rep.tables["checkpoints"] == [5, 50, 200]
    body = json.loads((tmp_path / "a" / "report.json").read_text())
    assert body["game_digest"] == rep.digest and "timestamp" not in body


def test_repeated_experiments_are_byte_identical(tmp_path):
    run_experiment(SENSOR_CFG, out_dir=str(tmp_path / "a"))
    run_experiment(SENSOR_CFG, out_dir=str(tmp_path / "b"))
    a, b = _files(tmp_path / "a"), _files(tmp_path / "b")
    assert sorted(a) == sorted(b) and len(a) > 2
    assert all(a[k] == b[k] for k in a)


def test_config_errors(tmp_path):
    with pytest.raises(ConfigError):
        run_experiment(dict(SENSOR_CFG, methods=[]), out_dir=str(tmp_path))
    with pytest.raises(ConfigError):
        run_experiment(dict(SENSOR_CFG, experiment="nope"), out_dir=str(tmp_path))
    with pytest.raises(ConfigError):
        run_experiment(dict(SENSOR_CFG, checks={"bogus": {}}), out_dir=str(tmp_path))
    with pytest.raises(ConfigError):
        run_experiment(dict(SENSOR_CFG, solver={"colour": 1}), out_dir=str(tmp_path))


def test_checks_and_divergence_are_reported(tmp_path):
    cfg = {"id": "lse", "experiment": "logsumexp", "methods": ["alg1", "gd"],
           "method_options": {"alg1": {"schedule": "constant:0.02", "iters": 20000, "ttol": 1e-12},
                              "gd": {"schedule": "constant:5.0", "iters": 200}},
           "inits": [[2.0, -2.5]],
           "checks": {"all_global": ["alg1"], "some_fail": ["gd"]}}
    rep = run_experiment(cfg, out_dir=str(tmp_path))
    assert rep.tables["verdicts"]["alg1"] == ["GlobalNE"]
    assert rep.tables["verdicts"]["gd"][0] != "GlobalNE"
    assert rep.passed


def test_experiment_from_a_game_file(tmp_path):
    build_quadratic_game().to_json(str(tmp_path / "g.json"))
    cfg = {"id": "q", "experiment": "game", "game": "g.json", "methods": ["alg1"],
           "solver": {"schedule": "constant:0.02", "iters": 5000, "ttol": 1e-12},
           "checks": {"all_global": ["alg1"]}, "out": "out"}
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps(cfg))
    rep = run_experiment(str(path))
    assert rep.passed and (tmp_path / "out" / "report.json").exists()


# ---------------------------------------------------------------- cli
@pytest.fixture
def games(tmp_path):
    paths = {}
    for name, g in {"quadratic": build_quadratic_game(), "toy": build_toy_game((0, 1), (1.5, 3), 0.1),
                    "logsumexp": build_logsumexp_game()}.items():
        paths[name] = str(tmp_path / f"{name}.json")
        g.to_json(paths[name])
    op = QuadraticOperator(np.zeros((1, 2, 2)), np.zeros((1, 2)), [1.0])
    flat = GameSpec([Box([-1], [1]), Box([-1], [1])], [op, op], [SumSquares(), SumSquares()])
    paths["flat"] = str(tmp_path / "flat.json")
    flat.to_json(paths["flat"])
    return paths


def test_cli_solve_writes_result_and_trace(games, tmp_path, capsys):
    out = tmp_path / "run"
    code = main(["solve", games["quadratic"], "--schedule", "constant:0.02", "--iters", "5000",
                 "--ttol", "1e-12", "--out", str(out)])
    assert code == 0
    summary = json.loads(capsys.readouterr().out)
    assert summary["certificate"]["verdict"] == "GlobalNE"
    with open(out / "trace.csv") as fh:
        assert next(csv.reader(fh)) == ["k", "alpha", "dist_sq", "gap", "step_norm"]
    assert json.loads((out / "result.json").read_text())["certificate"]["verdict"] == "GlobalNE"


def test_cli_certify_exit_codes(games, capsys):
    assert main(["certify", games["toy"], "[1.0, 1.5]"]) == 0
    assert main(["certify", games["toy"], '{"x": [1.0, 1.5], "sigma": [1.3, 1.3]}']) == 2
    assert main(["certify", games["logsumexp"], "[-1.80098129, -1.46518659]"]) == 2
    assert main(["certify", games["toy"], "[1.0]"]) == 3
    capsys.readouterr()


def test_cli_eplus_and_oracle(games, capsys):
    assert main(["eplus", games["toy"]]) == 0
    blocks = json.loads(capsys.readouterr().out)["blocks"]
    assert len(blocks) == 2
    assert main(["eplus", games["flat"]]) == 2
    capsys.readouterr()
    assert main(["oracle", games["toy"], "--grid", "51"]) == 0
    cands = json.loads(capsys.readouterr().out)["candidates"]
    assert np.allclose(cands[0]["polished"], [1.0, 1.5], atol=1e-8)


def test_cli_ode_writes_a_trace(games, tmp_path, capsys):
    out = tmp_path / "ode"
    code = main(["ode", games["quadratic"], "--dt", "0.05", "--tend", "2", "--ref", "[0.5, -0.2]",
                 "--out", str(out)])
    assert code in (0, 2)
    with open(out / "ode_trace.csv") as fh:
        header = next(csv.reader(fh))
    assert header == ["t", "x_1", "x_2", "sigma_1", "sigma_2", "dist"]
    capsys.readouterr()


def test_cli_experiment(tmp_path, capsys):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps(dict(SENSOR_CFG, methods=["alg1_potential"],
                                   checks={"mle_max": {"k": 200, "value": 0.1, "methods": ["alg1_potential"]}})))
    assert main(["experiment", str(cfg), "--out", str(tmp_path / "x")]) == 0
    assert json.loads(capsys.readouterr().out)["passed"] is True


def test_cli_config_errors(games, tmp_path, capsys):
    assert main(["solve", str(tmp_path / "missing.json")]) == 3
    assert main(["solve", games["quadratic"], "--method", "newton"]) == 3
    assert main(["solve", games["flat"]]) == 3
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    assert main(["eplus", str(bad)]) == 3
    with pytest.raises(SystemExit) as exc:
        main(["solve"])
    assert exc.value.code == 3
    with pytest.raises(SystemExit) as exc:
        main(["frobnicate"])
    assert exc.value.code == 3
    capsys.readouterr()
