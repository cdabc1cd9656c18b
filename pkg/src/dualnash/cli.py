"""
Command-line interface.

Exit codes: 0 success, 2 certification failed (or empty dual set / failed
experiment checks), 3 configuration or input error.
"""

import argparse
import json
import os
import sys

import numpy as np

from .duality import DEFAULT_KAPPA_X, certify, eplus_all
from .errors import ConfigError, DualNashError
from .game import GameSpec, _jsonable, natural_duals
from .mirror import default_maps
from .ode import default_init, init_from_point, integrate
from .oracle import brute_force_ne
from .runner import run_experiment
from .solver import SolverConfig, solve

EXIT_OK = 0
EXIT_CERT = 2
EXIT_CONFIG = 3


def _load_game(path):
    try:
        return GameSpec.from_json(path)
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read game file {path}: {exc}") from None
    except (KeyError, TypeError, ValueError) as exc:
        if isinstance(exc, DualNashError):
            raise
        raise ConfigError(f"invalid game file {path}: {exc}") from None


def _load_point(text):
    """A point given inline as JSON or as a path to a JSON file."""
    try:
        if os.path.exists(text):
            with open(text) as fh:
                data = json.load(fh)
        else:
            data = json.loads(text)
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read point {text!r}: {exc}") from None
    if isinstance(data, list):
        data = {"x": data}
    if not isinstance(data, dict) or "x" not in data:
        raise ConfigError("a point must be a list or an object with key 'x' (and optionally 'sigma')")
    return data


def _emit(obj):
    print(json.dumps(_jsonable(obj), indent=2, sort_keys=True))


def cmd_solve(args):
    game = _load_game(args.game)
    cfg = {"method": args.method, "iters": args.iters, "ttol": args.ttol, "seed": args.seed,
           "kappa_x": args.kappa_x}
    if args.schedule:
        cfg["schedule"] = args.schedule
    if args.sigma_init:
        cfg["sigma_init"] = args.sigma_init
    config = SolverConfig.from_dict(cfg)
    init = None if args.init is None else _load_point(args.init)["x"]
    res = solve(game, config=config, init=init)
    if args.out:
        os.makedirs(args.out, exist_ok=True)
        res.to_json(os.path.join(args.out, "result.json"))
        res.to_csv(os.path.join(args.out, "trace.csv"))
    _emit(res.summary())
    return EXIT_OK if res.certificate.is_global else EXIT_CERT


def cmd_ode(args):
    game = _load_game(args.game)
    eplus = eplus_all(game, args.kappa_x)
    if any(E.is_empty() for E in eplus):
        raise ConfigError("dual feasible set is empty")
    maps = default_maps(game, eplus)
    if args.init is None:
        init = default_init(game, maps)
    else:
        pt = _load_point(args.init)
        x = game.check_profile(pt["x"])
        sigma = pt.get("sigma")
        sigma = np.concatenate([E.midpoint() for E in eplus]) if sigma is None else sigma
        init = init_from_point(game, maps, x, sigma)
    ref = None
    if args.ref is not None:
        pt = _load_point(args.ref)
        ref = (pt["x"], pt.get("sigma", natural_duals(game, game.check_profile(pt["x"]))))
    trace = integrate(game, maps, init, dt=args.dt, t_end=args.tend, z_star=ref,
                      record_every=args.record_every)
    x, sigma = trace.x[-1], trace.sigma[-1]
    cert = certify(game, x, sigma, kappa_x=args.kappa_x, eplus=eplus)
    if args.out:
        os.makedirs(args.out, exist_ok=True)
        trace.to_csv(os.path.join(args.out, "ode_trace.csv"))
    _emit({"t_end": float(trace.t[-1]), "x": x, "sigma": sigma, "certificate": cert.to_dict()})
    return EXIT_OK if cert.is_global else EXIT_CERT


def cmd_certify(args):
    game = _load_game(args.game)
    pt = _load_point(args.point)
    x = game.check_profile(pt["x"])
    sigma = pt.get("sigma")
    sigma = natural_duals(game, x) if sigma is None else np.asarray(sigma, dtype=float)
    cert = certify(game, x, sigma, tol_vi=args.tol_vi, tol_dual=args.tol_dual, kappa_x=args.kappa_x)
    _emit(cert.to_dict())
    return EXIT_OK if cert.is_global else EXIT_CERT


def cmd_eplus(args):
    game = _load_game(args.game)
    sets = eplus_all(game, args.kappa_x)
    _emit({"kappa_x": args.kappa_x, "blocks": [E.to_dict() for E in sets]})
    return EXIT_CERT if any(E.is_empty() for E in sets) else EXIT_OK


def cmd_oracle(args):
    game = _load_game(args.game)
    cands = brute_force_ne(game, grid_per_dim=args.grid, polish_steps=args.polish_steps)
    _emit({"grid": args.grid, "candidates": cands})
    return EXIT_OK


def cmd_experiment(args):
    report = run_experiment(args.config, out_dir=args.out)
    _emit({"id": report.id, "passed": report.passed, "checks": report.checks,
           "game_digest": report.digest})
    return EXIT_OK if report.passed else EXIT_CERT


class _Parser(argparse.ArgumentParser):
    """Usage errors are configuration errors (exit 3), not certification failures."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_CONFIG, f"{self.prog}: error: {message}\n")


def build_parser():
    p = _Parser(prog="dualnash", description="Certified Nash equilibria via canonical duality.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sub.add_parser("solve", help="run a solver and certify the final point")
    s.add_argument("game")
    s.add_argument("--method", default="alg1")
    s.add_argument("--schedule", default=None, help="kind:value, e.g. invsqrt:1 or constant:0.02")
    s.add_argument("--iters", type=int, default=1000)
    s.add_argument("--ttol", type=float, default=1e-3)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--kappa-x", type=float, default=DEFAULT_KAPPA_X)
    s.add_argument("--init", default=None, help="starting profile as JSON or a JSON file")
    s.add_argument("--sigma-init", default=None, choices=["natural", "zero", "midpoint"])
    s.add_argument("--out", default=None)
    s.set_defaults(func=cmd_solve)

    o = sub.add_parser("ode", help="integrate the continuous-time dynamics")
    o.add_argument("game")
    o.add_argument("--dt", type=float, default=1e-2)
    o.add_argument("--tend", type=float, default=10.0)
    o.add_argument("--record-every", type=int, default=1)
    o.add_argument("--kappa-x", type=float, default=DEFAULT_KAPPA_X)
    o.add_argument("--init", default=None)
    o.add_argument("--ref", default=None, help="reference point for the dist column")
    o.add_argument("--out", default=None)
    o.set_defaults(func=cmd_ode)

    c = sub.add_parser("certify", help="certify a candidate point")
    c.add_argument("game")
    c.add_argument("point")
    c.add_argument("--tol-vi", type=float, default=None)
    c.add_argument("--tol-dual", type=float, default=None)
    c.add_argument("--kappa-x", type=float, default=DEFAULT_KAPPA_X)
    c.set_defaults(func=cmd_certify)

    e = sub.add_parser("eplus", help="build the dual feasible sets")
    e.add_argument("game")
    e.add_argument("--kappa-x", type=float, default=DEFAULT_KAPPA_X)
    e.set_defaults(func=cmd_eplus)

    g = sub.add_parser("oracle", help="brute-force grid search for equilibria")
    g.add_argument("game")
    g.add_argument("--grid", type=int, default=101)
    g.add_argument("--polish-steps", type=int, default=100)
    g.set_defaults(func=cmd_oracle)

    x = sub.add_parser("experiment", help="run an experiment configuration")
    x.add_argument("config")
    x.add_argument("--out", default=None)
    x.set_defaults(func=cmd_experiment)
    return p


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (DualNashError, FloatingPointError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
