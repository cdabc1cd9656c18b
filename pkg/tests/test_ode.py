import csv

import numpy as np
import pytest
from scipy.integrate import solve_ivp

from dualnash import default_maps, eplus_all, equilibrium_state, fit_exponential_rate, integrate, lyapunov, ode_rhs
from dualnash.errors import ConfigError, FitError
from dualnash.ode import OdeState, _rhs_vec, init_from_point, lyapunov_trace, state_point


@pytest.fixture
def setup(monotone):
    E = eplus_all(monotone)
    maps = default_maps(monotone, E)
    x0 = np.random.default_rng(0).uniform(-0.4, 0.4, 4)
    init = init_from_point(monotone, maps, x0, [0.95, 1.4])
    eq = equilibrium_state(monotone, maps, monotone.meta["x_star"], monotone.meta["sigma_star"])
    return monotone, maps, init, eq


def test_equilibrium_state_is_a_fixed_point(setup):
    game, maps, _, eq = setup
    dy, dnu = ode_rhs(game, maps, eq)
    assert np.max(np.abs(np.r_[dy, dnu])) <= 1e-12
    x, s = state_point(game, maps, eq)
    np.testing.assert_allclose(x, 0, atol=1e-12)
    np.testing.assert_allclose(s, 1, atol=1e-12)


def test_rk4_agrees_with_an_adaptive_integrator(setup):
    game, maps, init, _ = setup
    trace = integrate(game, maps, init, dt=1e-2, t_end=5.0)
    n = game.n_total

    def f(t, v):
        dy, dnu = _rhs_vec(game, maps, v[:n], v[n:])
        return np.r_[dy, dnu]

    ref = solve_ivp(f, (0, 5.0), init.vector(), method="DOP853", rtol=1e-12, atol=1e-12)
    np.testing.assert_allclose(np.r_[trace.y[-1], trace.nu[-1]], ref.y[:, -1], atol=1e-8)


def test_trajectory_stays_feasible_and_lyapunov_decreases(setup):
    game, maps, init, eq = setup
    trace = integrate(game, maps, init, dt=1e-2, t_end=20.0, z_star=(np.zeros(4), np.ones(2)), record_every=5)
    E = eplus_all(game)
    for x, s in zip(trace.x, trace.sigma):
        assert game.is_feasible(x)
        assert E[0].in_representation(s[:1], 1e-12) and E[1].in_representation(s[1:], 1e-12)
    V = lyapunov_trace(game, maps, trace, eq)
    assert np.all(V >= 0)
    assert np.all(np.diff(V) <= 1e-8)
    assert lyapunov(game, maps, eq, eq) == pytest.approx(0.0, abs=1e-14)
    assert trace.dist[-1] < trace.dist[0]


def test_rate_fit_on_an_exact_exponential():
    t = np.linspace(0, 10, 101)
    fit = fit_exponential_rate(t, 3.0 * np.exp(-0.7 * t), kappa=0.5, tau=2.0)
    assert fit.rate == pytest.approx(-0.7)
    assert fit.r2 == pytest.approx(1.0)
    assert fit.bound == pytest.approx(0.125)
    with pytest.raises(FitError):
        fit_exponential_rate(t[:5], np.exp(-t[:5]))
    with pytest.raises(FitError):
        fit_exponential_rate(t, np.zeros_like(t))


def test_trace_csv_format(setup, tmp_path):
    game, maps, init, _ = setup
    trace = integrate(game, maps, init, dt=0.05, t_end=0.5, z_star=(np.zeros(4), np.ones(2)))
    p = tmp_path / "trace.csv"
    trace.to_csv(p)
    rows = list(csv.reader(open(p)))
    assert rows[0] == ["t", "x_1", "x_2", "x_3", "x_4", "sigma_1", "sigma_2", "dist"]
    assert len(rows) == 12
    assert float(rows[5][0]) == pytest.approx(0.2)
    # 17 significant digits reproduce the doubles exactly
    np.testing.assert_array_equal(np.array(rows[-1][1:5], dtype=float), trace.x[-1])
    trace.to_csv(tmp_path / "again.csv")
    assert open(p).read() == open(tmp_path / "again.csv").read()


def test_invalid_steps(setup):
    game, maps, init, _ = setup
    with pytest.raises(ConfigError):
        integrate(game, maps, init, dt=0.5)
    with pytest.raises(ConfigError):
        integrate(game, maps, init, dt=0.01, t_end=-1.0)


def test_state_vector():
    s = OdeState(np.array([1.0]), np.array([2.0, 3.0]))
    np.testing.assert_array_equal(s.vector(), [1.0, 2.0, 3.0])
