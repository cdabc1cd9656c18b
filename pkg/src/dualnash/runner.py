"""
Experiment runner: build a game, run methods from several starting
points, write traces and a machine-diffable report.

A configuration is a JSON object such as::

    {"id": "sensor-table",
     "experiment": "sensor", "params": {"n_sensors": 10},
     "methods": ["alg1_potential", "pgd", "sgd"],
     "solver": {"schedule": "invsqrt:0.0637", "iters": 200, "ttol": 0},
     "method_options": {"pgd": {"schedule": "constant:0.01"}},
     "inits": {"kind": "sensor", "count": 3, "seed": 0},
     "checkpoints": [5, 50, 200],
     "checks": {"mle_max": {"k": 200, "value": 0.1, "methods": ["alg1_potential"]}}}

The report body holds no timestamps, so repeated runs are byte-identical.
"""

import hashlib
import json
import os

import numpy as np

from . import experiments
from .errors import ConfigError, DivergenceError, DualNashError
from .game import GameSpec, _jsonable
from .metrics import mle
from .solver import SolverConfig, solve

BUILDERS = {
    "sensor": experiments.build_sensor_game,
    "logsumexp": experiments.build_logsumexp_game,
    "toy": experiments.build_toy_game,
    "quadratic": experiments.build_quadratic_game,
    "monotone": experiments.build_monotone_game,
}


def game_digest(game):
    text = json.dumps(game.to_dict(), sort_keys=True)
    return hashlib.sha256(text.encode()).hexdigest()


def build_game(cfg, base_dir="."):
    kind = cfg.get("experiment")
    if kind == "game":
        path = cfg.get("game")
        if path is None:
            raise ConfigError("experiment 'game' needs a 'game' path")
        return GameSpec.from_json(os.path.join(base_dir, path))
    if kind not in BUILDERS:
        raise ConfigError(f"unknown experiment {kind!r}; expected one of {', '.join(sorted(BUILDERS))} or 'game'")
    try:
        return BUILDERS[kind](**cfg.get("params", {}))
    except TypeError as exc:
        raise ConfigError(f"experiment {kind!r}: bad params ({exc})") from None


def build_inits(game, spec):
    if spec is None or spec == "default":
        return [game.midpoint()]
    if isinstance(spec, list):
        return [game.check_profile(p) for p in spec]
    kind = spec.get("kind")
    count = int(spec.get("count", 1))
    seed = spec.get("seed", 0)
    if kind == "sensor":
        return experiments.sensor_inits(game, count=count, seed=seed, std=spec.get("std", 0.5))
    if kind == "logsumexp":
        return experiments.logsumexp_inits(count=count, seed=seed)
    if kind == "random":
        rng = np.random.default_rng(seed)
        return [np.concatenate([s.sample(rng, 1)[0] for s in game.sets]) for _ in range(count)]
    raise ConfigError(f"unknown init kind {kind!r}")


class ExperimentReport:
    """Runs, metric tables and checks of one experiment."""

    def __init__(self, exp_id, digest, runs, tables, checks, files):
        self.id = exp_id
        self.digest = digest
        self.runs = runs
        self.tables = tables
        self.checks = checks
        self.files = files

    @property
    def passed(self):
        return all(c["pass"] for c in self.checks.values())

    def to_dict(self):
        return _jsonable({"id": self.id, "game_digest": self.digest, "runs": self.runs,
                          "tables": self.tables, "checks": self.checks, "passed": self.passed,
                          "files": self.files})

    def to_json(self):
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)


def _method_specs(cfg):
    methods = cfg.get("methods")
    if not methods:
        raise ConfigError("experiment: 'methods' must be a non-empty list")
    out = []
    for m in methods:
        if isinstance(m, str):
            out.append((m, {}))
        elif isinstance(m, dict) and "method" in m:
            opts = dict(m)
            out.append((opts.pop("method"), opts))
        else:
            raise ConfigError(f"experiment: cannot interpret method entry {m!r}")
    return out


def run_experiment(config, out_dir=None):
    """Run an experiment from a config path or dict and write its artefacts.

    Returns
    -------
    ExperimentReport
        ``report.passed`` reflects the checks listed in the config.
    """
    base_dir = "."
    if isinstance(config, (str, os.PathLike)):
        base_dir = os.path.dirname(os.path.abspath(config))
        try:
            with open(config) as fh:
                config = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read experiment config: {exc}") from None
    if not isinstance(config, dict):
        raise ConfigError("experiment config must be a JSON object")
    cfg = config
    exp_id = str(cfg.get("id", cfg.get("experiment", "experiment")))
    out_dir = out_dir or cfg.get("out") or os.path.join(".", exp_id)
    if not os.path.isabs(out_dir) and cfg.get("out") and out_dir == cfg.get("out"):
        out_dir = os.path.join(base_dir, out_dir)
    game = build_game(cfg, base_dir)
    inits = build_inits(game, cfg.get("inits"))
    checkpoints = sorted(int(k) for k in cfg.get("checkpoints", []))
    x_true = game.meta.get("x_true")
    os.makedirs(os.path.join(out_dir, "traces"), exist_ok=True)
    game.to_json(os.path.join(out_dir, "game.json"))
    files = ["game.json"]
    runs = []
    mle_table = {}
    verdicts = {}
    for method, opts in _method_specs(cfg):
        options = dict(cfg.get("solver", {}))
        options.update(cfg.get("method_options", {}).get(method, {}))
        options.update(opts)
        options["method"] = method
        try:
            sc = SolverConfig.from_dict(options)
        except TypeError as exc:
            raise ConfigError(f"experiment: bad solver options for {method} ({exc})") from None
        label = sc.method
        mle_table[label] = []
        verdicts[label] = []
        for j, x0 in enumerate(inits):
            snaps = {}

            def cb(k, x, sigma, snaps=snaps):
                if k in checkpoints:
                    snaps[k] = x.copy()

            stem = f"{label}_init{j}"
            try:
                res = solve(game, config=sc, init=x0, callback=cb)
            except DivergenceError as exc:
                # a diverging baseline is an outcome, not a configuration error
                x_last = np.asarray(exc.last_state[0], dtype=float)
                run = {"method": label, "init": j, "x0": x0, "iterations": exc.iteration,
                       "converged": False, "verdict": "Diverged", "vi_residual": None, "x": x_last,
                       "trace": None, "reason": str(exc)}
                if x_true is not None:
                    at = {k: mle(snaps.get(k, x_last), x_true, game.N) for k in checkpoints}
                    run["mle"] = {str(k): v for k, v in at.items()}
                    run["mle_final"] = mle(x_last, x_true, game.N)
                    mle_table[label].append([at[k] for k in checkpoints])
                verdicts[label].append("Diverged")
                runs.append(run)
                continue
            except DualNashError as exc:
                raise type(exc)(f"experiment {exp_id}, method {label}, init {j}: {exc}") from exc
            res.to_csv(os.path.join(out_dir, "traces", stem + ".csv"))
            res.to_json(os.path.join(out_dir, "traces", stem + ".json"))
            files += [f"traces/{stem}.csv", f"traces/{stem}.json"]
            run = {"method": label, "init": j, "x0": x0, "iterations": res.iterations,
                   "converged": res.converged, "verdict": res.certificate.verdict,
                   "vi_residual": res.certificate.vi_residual, "x": res.x,
                   "trace": f"traces/{stem}.csv"}
            if x_true is not None:
                # a run that stopped early keeps its final point for later checkpoints
                at = {k: mle(snaps.get(k, res.x), x_true, game.N) for k in checkpoints}
                run["mle"] = {str(k): v for k, v in at.items()}
                run["mle_final"] = mle(res.x, x_true, game.N)
                mle_table[label].append([at[k] for k in checkpoints])
            verdicts[label].append(res.certificate.verdict)
            runs.append(run)
    tables = {"checkpoints": checkpoints, "verdicts": verdicts}
    if x_true is not None:
        tables["mle"] = mle_table
    checks = _evaluate_checks(cfg.get("checks", {}), tables)
    report = ExperimentReport(exp_id, game_digest(game), runs, tables, checks, sorted(files + ["report.json"]))
    with open(os.path.join(out_dir, "report.json"), "w") as fh:
        fh.write(report.to_json() + "\n")
    return report


def _evaluate_checks(checks, tables):
    out = {}
    cps = tables["checkpoints"]
    for name, spec in checks.items():
        if name == "mle_max":
            col = cps.index(int(spec["k"])) if int(spec["k"]) in cps else None
            if col is None or "mle" not in tables:
                raise ConfigError("check mle_max needs its k among the checkpoints and a ground truth")
            vals = [row[col] for m in spec["methods"] for row in tables["mle"][m]]
            out[name] = {"pass": bool(all(v <= spec["value"] for v in vals)), "values": vals}
        elif name == "mle_monotone":
            ok = True
            for m in spec["methods"]:
                for row in tables["mle"][m]:
                    ok &= all(a >= b for a, b in zip(row, row[1:]))
            out[name] = {"pass": bool(ok)}
        elif name == "all_global":
            ok = all(v == "GlobalNE" for m in spec for v in tables["verdicts"][m])
            out[name] = {"pass": bool(ok)}
        elif name == "some_fail":
            fails = {m: sum(v != "GlobalNE" for v in tables["verdicts"][m]) for m in spec}
            out[name] = {"pass": bool(all(f >= 1 for f in fails.values())), "failures": fails}
        else:
            raise ConfigError(f"unknown check {name!r}")
    return out
