import csv

import numpy as np
import pytest

from dualnash import (Constant, HarmonicKappa, InvSqrt, SolverConfig, default_maps, eplus_all, estimate_constants,
                      solve, step_general, step_potential)
from dualnash.errors import ConfigError, DivergenceError
from dualnash.experiments import potential_saddle
from dualnash.game import natural_duals
from dualnash.solver import duality_gap, schedule_from


def test_schedules():
    assert HarmonicKappa(0.5)(3) == pytest.approx(2 / (0.5 * 4))
    assert InvSqrt(0.0637)(100) == pytest.approx(0.00637)
    assert Constant(0.1)(7) == 0.1
    assert isinstance(schedule_from("invsqrt:2"), InvSqrt)
    assert schedule_from({"kind": "harmonic", "kappa": 2.0})(1) == pytest.approx(0.5)
    for bad in ("invsqrt", "constant:abc", {"kind": "cosine", "value": 1}, "constant:-1"):
        with pytest.raises(ConfigError):
            schedule_from(bad)


def test_config_validation():
    with pytest.raises(ConfigError):
        SolverConfig(method="newton")
    with pytest.raises(ConfigError):
        SolverConfig(iters=0)
    with pytest.raises(ConfigError):
        SolverConfig.from_dict({"method": "alg1", "step": 1})


def test_single_step_matches_the_update_rule(quadratic):
    E = eplus_all(quadratic)
    maps = default_maps(quadratic, E)
    x = np.array([0.3, -0.2])
    sigma = np.array([20.0, 21.0])
    alpha = 0.01
    xn, sn = step_general(quadratic, maps, x, sigma, alpha)
    for i in range(2):
        blk = quadratic.blocks[i]
        g = sigma[i] * blk.op.jacobian(x)[0][i]
        m = maps.primal[i]
        np.testing.assert_allclose(xn[i:i + 1], m.conj_grad(m.grad(x[i:i + 1]) - alpha * g))
        xi = np.clip(sigma[i] / 2, blk.theta_lo, blk.theta_hi)
        lo, hi = E[i].interval()
        expect = np.clip(sigma[i] + alpha * (blk.op.value(x)[0] - xi[0]), lo[0], hi[0])
        assert sn[i] == pytest.approx(expect)


def test_potential_step_needs_a_potential_game(quadratic, sensor):
    E = eplus_all(quadratic)
    with pytest.raises(ConfigError):
        step_potential(quadratic, default_maps(quadratic, E), np.zeros(2), np.ones(2), 0.1)
    E = eplus_all(sensor)
    x = np.asarray(sensor.meta["x_true"])
    xn, sn = step_potential(sensor, default_maps(sensor, E), x, E[0].midpoint(), 0.01)
    assert sensor.is_feasible(xn) and E[0].in_representation(sn)
    with pytest.raises(ConfigError):
        solve(quadratic, config=SolverConfig(method="alg1_potential"))


def test_alg1_certifies_the_quadratic_equilibrium(quadratic):
    res = solve(quadratic, config=SolverConfig(schedule=Constant(0.02), iters=20000, ttol=1e-12))
    assert res.certificate.verdict == "GlobalNE"
    assert res.converged and res.iterations < 20000
    np.testing.assert_allclose(res.x, quadratic.meta["x_ne"], atol=1e-8)


@pytest.mark.parametrize("method", ["gd", "pgd", "omd", "eg", "proximal"])
def test_baselines_reach_the_convex_equilibrium(quadratic, method):
    res = solve(quadratic, config=SolverConfig(method=method, schedule=Constant(0.01), iters=20000, ttol=1e-13))
    assert np.max(np.abs(res.x - quadratic.meta["x_ne"])) <= 1e-8
    assert res.certificate.verdict == "GlobalNE"


@pytest.mark.parametrize("seed", [0, 3])
def test_sgd_reaches_the_convex_equilibrium_with_decaying_steps(quadratic, seed):
    res = solve(quadratic, config=SolverConfig(method="sgd", schedule=HarmonicKappa(50.0), iters=20000, ttol=0,
                                               seed=seed, sgd_std=0.1))
    assert np.max(np.abs(res.x - quadratic.meta["x_ne"])) <= 1e-4


def test_sgd_error_keeps_falling_under_the_default_noise(quadratic):
    x_ne = np.asarray(quadratic.meta["x_ne"])
    err = {1000: [], 20000: []}

    def cb(k, x, s):
        if k in err:
            err[k].append(np.max(np.abs(x - x_ne)))

    for seed in range(3):
        solve(quadratic, config=SolverConfig(method="sgd", schedule=HarmonicKappa(50.0), iters=20000, ttol=0,
                                             seed=seed), callback=cb)
    assert np.mean(err[20000]) < 0.25 * np.mean(err[1000])


def test_sgd_depends_on_the_seed_only(quadratic):
    cfg = dict(method="sgd", schedule=Constant(0.01), iters=50, ttol=0)
    a = solve(quadratic, config=SolverConfig(seed=1, **cfg)).x
    b = solve(quadratic, config=SolverConfig(seed=1, **cfg)).x
    c = solve(quadratic, config=SolverConfig(seed=2, **cfg)).x
    np.testing.assert_array_equal(a, b)
    assert not np.array_equal(a, c)


def test_divergence_keeps_the_last_finite_iterate(logsumexp):
    with pytest.raises(DivergenceError) as info:
        solve(logsumexp, config=SolverConfig(method="gd", schedule=Constant(0.5), iters=20000, ttol=0),
              init=[2.0, -2.5])
    x_last, _ = info.value.last_state
    assert np.all(np.isfinite(x_last)) and info.value.iteration > 1


def test_empty_dual_set_is_a_config_error(quadratic):
    with pytest.raises(ConfigError):
        solve(quadratic, config=SolverConfig(kappa_x=1e6))


def test_infeasible_start_is_rejected(quadratic):
    with pytest.raises(ConfigError):
        solve(quadratic, init=[5.0, 0.0])


def test_trace_columns_and_callback(monotone, tmp_path):
    seen = []
    cfg = SolverConfig(schedule=HarmonicKappa(0.5), iters=30, ttol=0, z_star=(np.zeros(4), np.ones(2)),
                       gap_ref=(np.zeros(4), np.ones(2)))
    res = solve(monotone, config=cfg, init=[0.1, 0.2, -0.1, 0.3], callback=lambda k, x, s: seen.append(k))
    assert seen == list(range(1, 31))
    p = tmp_path / "t.csv"
    res.to_csv(p)
    rows = list(csv.reader(open(p)))
    assert rows[0] == ["k", "alpha", "dist_sq", "gap", "step_norm"]
    assert len(rows) == 31
    assert float(rows[1][1]) == pytest.approx(2 / (0.5 * 2))
    assert all(float(r[2]) >= 0 for r in rows[1:])
    assert res.trace["dist_sq"][-1] < res.trace["dist_sq"][0]


def test_repeated_runs_are_byte_identical(sensor, tmp_path):
    cfg = SolverConfig(method="alg1_potential", schedule=InvSqrt(0.0637), iters=200, ttol=0, sigma_init="zero")
    x0 = np.asarray(sensor.meta["x_true"]) + 0.3
    for name in ("a", "b"):
        r = solve(sensor, config=cfg, init=x0)
        r.to_csv(tmp_path / f"{name}.csv")
        r.to_json(tmp_path / f"{name}.json")
    assert (tmp_path / "a.csv").read_bytes() == (tmp_path / "b.csv").read_bytes()
    assert (tmp_path / "a.json").read_bytes() == (tmp_path / "b.json").read_bytes()


def test_duality_gap_vanishes_at_the_saddle(sensor):
    x, s = potential_saddle(sensor)
    assert duality_gap(sensor, x, s, x, s) == pytest.approx(0.0, abs=1e-12)
    # and is nonnegative at other points
    y = np.asarray(sensor.meta["x_true"]) + 0.2
    t = natural_duals(sensor, y)
    lo, hi = eplus_all(sensor)[0].interval()
    assert duality_gap(sensor, y, np.clip(t, lo, hi), x, s) >= -1e-9


def test_sigma_init_modes(quadratic):
    E = eplus_all(quadratic)
    for mode in ("natural", "zero", "midpoint", [15.0, 15.0]):
        res = solve(quadratic, config=SolverConfig(schedule=Constant(0.02), iters=1, ttol=0, sigma_init=mode))
        assert E[0].in_representation(res.sigma[:1])
    with pytest.raises(ConfigError):
        solve(quadratic, config=SolverConfig(iters=1, sigma_init="random"))


def test_estimated_constants_are_positive(monotone):
    c = estimate_constants(monotone, z_ref=(np.zeros(4), np.ones(2)), radius=0.05)
    assert c["kappa"] > 0 and c["mu"] > 0 and c["M1"] > 0 and c["d"] >= 0
    with pytest.raises(ConfigError):
        from dualnash.experiments import build_sensor_game
        from dualnash.sets import FullSpace
        from dualnash import GameSpec
        g = build_sensor_game(n_sensors=3)
        estimate_constants(GameSpec([FullSpace(2)] * 3, g.blocks[0].op, g.blocks[0].psi, potential=True,
                                    theta=None))
