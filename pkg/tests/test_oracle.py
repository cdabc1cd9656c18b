"""Grid equilibrium oracle."""

import numpy as np
import pytest

from dualnash import Box, ConfigError, FullSpace, GameSpec, QuadraticOperator, Simplex, SumSquares, certify
from dualnash.game import natural_duals
from dualnash.oracle import brute_force_ne, nash_gap, player_grid


def test_quadratic_equilibrium_within_one_cell(quadratic):
    cands = brute_force_ne(quadratic, grid_per_dim=101)
    x_ne = np.asarray(quadratic.meta["x_ne"])
    cell = 4.0 / 100
    assert np.max(np.abs(cands[0]["x"] - x_ne)) <= cell
    assert np.max(np.abs(cands[0]["polished"] - x_ne)) <= 1e-6
    assert nash_gap(quadratic, cands[0]["polished"]) <= 1e-8


def test_single_player_reduces_to_grid_minimisation():
    # J = (x^2 - 2x + 3)^2 on [-3, 3]; Lambda > 0, so the minimiser is x = 1
    op = QuadraticOperator([[[1.0]]], [[-2.0]], [3.0])
    g = GameSpec([Box([-3], [3])], [op], [SumSquares()])
    grid = np.linspace(-3, 3, 61)
    J = (grid ** 2 - 2 * grid + 3) ** 2
    cands = brute_force_ne(g, grid_per_dim=61, polish_steps=0)
    assert cands[0]["x"][0] == pytest.approx(grid[np.argmin(J)])


def test_toy_oracle_point_certifies(toy):
    best = brute_force_ne(toy, grid_per_dim=101)[0]["polished"]
    assert np.allclose(best, [1.0, 1.5], atol=1e-9)
    assert certify(toy, best, natural_duals(toy, best)).is_global


def test_simplex_grid_lies_on_the_simplex():
    pts, _ = player_grid(Simplex(3), 11)
    assert np.allclose(pts.sum(axis=1), 1.0) and np.all(pts >= -1e-12)


def test_unbounded_and_oversized_grids_are_rejected(quadratic):
    with pytest.raises(ConfigError):
        player_grid(FullSpace(1), 11)
    with pytest.raises(ConfigError):
        brute_force_ne(quadratic, grid_per_dim=101, budget=100)
