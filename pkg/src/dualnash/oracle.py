"""
Brute-force equilibrium oracle on a product grid.

For every grid profile the Nash gap ``max_i [J_i(x) - min_{x_i'} J_i(x_i', x_-i)]``
is computed with the inner minimum taken over player ``i``'s grid.
Candidates with small gap are deduplicated and optionally polished by
projected best-response gradient steps.
"""

import itertools

import numpy as np

from .errors import ConfigError
from .game import grad_payoff
from .sets import Ball, Box, Simplex

GRID_BUDGET = 10 ** 7


def player_grid(s, per_dim):
    """Grid points of one player's set (bounding-box grid filtered to the set)."""
    lo, hi = s.bounds()
    if not (np.all(np.isfinite(lo)) and np.all(np.isfinite(hi))):
        raise ConfigError(f"oracle: cannot grid the unbounded set {s.kind}")
    axes = [np.linspace(l, h, per_dim) for l, h in zip(lo, hi)]
    pts = np.array(list(itertools.product(*axes))) if len(axes) > 1 else axes[0][:, None]
    if isinstance(s, Box):
        return pts, (hi - lo) / (per_dim - 1)
    if isinstance(s, Simplex):
        pts = pts[np.abs(pts.sum(axis=1) - 1.0) <= 0.5 / (per_dim - 1)]
        pts = np.array([s.project(p) for p in pts])
    elif isinstance(s, Ball):
        pts = pts[[s.contains(p, 1e-12) for p in pts]]
    else:
        pts = pts[[s.contains(p, 1e-12) for p in pts]]
    if pts.shape[0] == 0:
        raise ConfigError("oracle: grid misses the feasible set; increase the resolution")
    return pts, (hi - lo) / (per_dim - 1)


def _payoff_table(game, grids):
    """``J_i`` on the full product grid, one array per player."""
    shape = tuple(g.shape[0] for g in grids)
    idx = np.indices(shape).reshape(len(grids), -1).T
    X = np.concatenate([grids[i][idx[:, i]] for i in range(game.N)], axis=1)
    tables = []
    for i in range(game.N):
        blk = game.blocks[game.block_of[i]]
        op = blk.op
        lam = np.einsum("kab,ma,mb->mk", op.Q, X, X) + X @ op.r.T + op.c
        inv = game.involved(i)
        J = blk.psi.elementwise(lam[:, inv]).sum(axis=1)
        tables.append(J.reshape(shape))
    return tables, X.reshape(shape + (-1,))


def _lipschitz(game, i, x, h=1e-4):
    sl = game.slice(i)
    n = sl.stop - sl.start
    H = np.zeros((n, n))
    for a in range(n):
        e = np.zeros(game.n_total)
        e[sl.start + a] = h
        H[:, a] = (grad_payoff(game, i, game.project(x + e)) - grad_payoff(game, i, game.project(x - e))) / (2 * h)
    return max(float(np.linalg.norm(H, 2)), 1e-3)


def polish(game, x, steps=100):
    """Jacobi projected gradient steps with step ``1/(2L_i)``, ``L_i`` from local curvature."""
    x = game.project(np.asarray(x, dtype=float))
    for _ in range(steps):
        new = x.copy()
        for i in range(game.N):
            sl = game.slice(i)
            L = _lipschitz(game, i, x)
            v = x[sl] - grad_payoff(game, i, x) / (2.0 * L)
            new[sl] = game.sets[i].project(v)
        x = new
    return x


def brute_force_ne(game, grid_per_dim=101, polish_steps=100, max_candidates=20, budget=GRID_BUDGET):
    """Grid search for Nash equilibria.

    Returns
    -------
    list of dict
        Entries ``{"x", "gap", "polished"}`` sorted by gap.  The tolerance is
        the larger of twice the smallest gap and the largest change of any
        ``J_i`` between neighbouring grid points along its own axes.
    """
    grids, steps = zip(*(player_grid(s, int(grid_per_dim)) for s in game.sets))
    total = int(np.prod([g.shape[0] for g in grids], dtype=float))
    if total > budget:
        raise ConfigError(f"oracle: grid of {total} profiles exceeds the budget of {budget}")
    tables, X = _payoff_table(game, grids)
    gap = np.zeros(tables[0].shape)
    variation = 0.0
    for i, J in enumerate(tables):
        best = J.min(axis=i, keepdims=True)
        gap = np.maximum(gap, J - best)
        if J.shape[i] > 1:
            variation = max(variation, float(np.max(np.abs(np.diff(J, axis=i)))))
    tol = max(2.0 * float(gap.min()), variation)
    # local minima of the gap with gap below tolerance
    flat = np.argsort(gap, axis=None)
    chosen = []
    shape = gap.shape
    for f in flat:
        if gap.flat[f] > tol or len(chosen) >= max_candidates:
            break
        idx = np.array(np.unravel_index(f, shape))
        if any(np.max(np.abs(idx - c)) <= 2 for c, _ in chosen):
            continue
        chosen.append((idx, float(gap.flat[f])))
    out = []
    for idx, g in chosen:
        x = X[tuple(idx)].copy()
        entry = {"x": x, "gap": g, "grid_index": idx.tolist()}
        entry["polished"] = polish(game, x, polish_steps) if polish_steps else x.copy()
        out.append(entry)
    return out


def nash_gap(game, x, grid_per_dim=201):
    """Nash gap of a profile against each player's own grid."""
    x = game.check_profile(x)
    from .game import eval_payoff

    worst = 0.0
    for i, s in enumerate(game.sets):
        pts, _ = player_grid(s, grid_per_dim)
        sl = game.slice(i)
        base = eval_payoff(game, i, x)
        best = base
        for p in pts:
            v = x.copy()
            v[sl] = p
            best = min(best, eval_payoff(game, i, v))
        worst = max(worst, base - best)
    return worst
