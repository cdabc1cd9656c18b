"""
Builders for the benchmark games.

* ``build_sensor_game``: ring sensor localisation as a potential game with
  a consistent ground truth.
* ``build_logsumexp_game``: two-player log-sum-exp game with one global
  equilibrium and a second Nash stationary point.
* ``build_toy_game``: the scalar distance game
  ``J_i = ((x_1 - x_2)^2 - d)^2``.
* ``build_quadratic_game``: a convex game whose equilibrium solves a
  linear system.
* ``build_monotone_game``: a strongly monotone instance with the known
  solution ``x = 0``, ``sigma = 1``.
"""

import numpy as np
from scipy.optimize import minimize

from .canonical import ScaledLogistic, SumSquares
from .duality import eplus_all
from .errors import ConfigError
from .game import GameSpec, QuadraticOperator
from .sets import Ball, Box


def build_sensor_game(n_sensors=10, seed=0, d_range=(5.0, 10.0), box=(-6.0, 6.0), deviation=True,
                      d_scale=0.1, d_gain=2.0, max_tries=10000):
    """Ring sensor network localisation as a potential game.

    True positions lie on a jittered circle whose radius makes neighbour
    chords fall inside ``d_range``; draws are rejected until every squared
    neighbour distance lies in ``d_range``.  Components are
    ``||x_i - x_j||^2 - d_ij`` for ring edges and, with ``deviation``, the
    entries of ``D_i x_i - e_i`` with ``D_i = d_gain (I + d_scale N(0, 1))`` and
    ``e_i = D_i x_i*``.  All components share ``psi = sum of squares``.

    The ground truth is stored in ``meta["x_true"]``.
    """
    n = int(n_sensors)
    if n < 3:
        raise ConfigError("sensor game needs at least 3 sensors")
    lo, hi = float(box[0]), float(box[1])
    if not lo < hi:
        raise ConfigError("sensor game: box must satisfy lower < upper")
    d_lo, d_hi = float(d_range[0]), float(d_range[1])
    diam_sq = 2.0 * (hi - lo) ** 2
    if not 0 <= d_lo <= d_hi or d_lo > diam_sq:
        raise ConfigError(f"sensor game: distance range {d_range} is infeasible for a box of squared diameter {diam_sq}")
    radius = np.sqrt(0.5 * (d_lo + d_hi)) / (2.0 * np.sin(np.pi / n))
    centre = 0.5 * (lo + hi)
    jitter_t = 0.15 * 10.0 / n
    jitter_r = 0.5 * radius / 4.4
    if radius + jitter_r >= 0.5 * (hi - lo):
        raise ConfigError("sensor game: the ring does not fit in the box for this distance range")
    rng = np.random.default_rng(seed)
    edges = [(i, (i + 1) % n) for i in range(n)]
    for _ in range(max_tries):
        th = 2.0 * np.pi * np.arange(n) / n + rng.uniform(-jitter_t, jitter_t, n)
        r = radius + rng.uniform(-jitter_r, jitter_r, n)
        xt = centre + np.c_[r * np.cos(th), r * np.sin(th)]
        d = np.array([np.sum((xt[i] - xt[j]) ** 2) for i, j in edges])
        if d.min() >= d_lo and d.max() <= d_hi:
            break
    else:
        raise ConfigError("sensor game: could not draw distances inside d_range")
    D = d_gain * (np.eye(2) + d_scale * rng.normal(0.0, 1.0, (n, 2, 2)))
    e = np.einsum("nij,nj->ni", D, xt)

    dim = 2 * n
    q = n + (2 * n if deviation else 0)
    Q = np.zeros((q, dim, dim))
    rr = np.zeros((q, dim))
    c = np.zeros(q)
    eye = np.eye(2)
    for k, (i, j) in enumerate(edges):
        si, sj = slice(2 * i, 2 * i + 2), slice(2 * j, 2 * j + 2)
        Q[k, si, si] += eye
        Q[k, sj, sj] += eye
        Q[k, si, sj] -= eye
        Q[k, sj, si] -= eye
        c[k] = -d[k]
    if deviation:
        for i in range(n):
            for m in range(2):
                k = n + 2 * i + m
                rr[k, 2 * i:2 * i + 2] = D[i, m]
                c[k] = -e[i, m]
    sets = [Box([lo, lo], [hi, hi]) for _ in range(n)]
    meta = {"x_true": xt.ravel().tolist(), "d": d.tolist(), "edges": edges, "seed": seed}
    return GameSpec(sets, QuadraticOperator(Q, rr, c), SumSquares(), potential=True, meta=meta,
                    name=f"sensor-ring-{n}")


def sensor_inits(game, count=3, seed=0, std=0.5, margin=0.1):
    """Perturbed starting profiles ``x_true + N(0, std^2)`` clipped inside the box.

    Init ``j`` uses the generator ``default_rng([seed, j])``.
    """
    xt = np.asarray(game.meta["x_true"], dtype=float)
    lo = np.concatenate([s.bounds()[0] for s in game.sets]) + margin
    hi = np.concatenate([s.bounds()[1] for s in game.sets]) - margin
    out = []
    for j in range(count):
        rng = np.random.default_rng([seed, j])
        out.append(np.clip(xt + rng.normal(0.0, std, xt.size), lo, hi))
    return out


def potential_saddle(game, eplus=None, start=None):
    """Saddle point of the shared complementary function of a potential game.

    Restricted to a sum-of-squares block with an interval dual set ``[l, u]``
    and box player sets.  Maximising ``s' Lambda(x) - ||s||^2 / 4`` over
    ``s`` gives ``s = clip(2 Lambda(x), l, u)``; the resulting value
    function is convex-concave reduced to ``x`` alone and is minimised by
    L-BFGS-B.

    Returns
    -------
    tuple of ndarray
        ``(x, sigma)``.
    """
    if not game.potential or not isinstance(game.blocks[0].psi, SumSquares):
        raise ConfigError("potential_saddle needs a sum-of-squares potential game")
    if not all(isinstance(s, Box) for s in game.sets):
        raise ConfigError("potential_saddle needs box player sets")
    E = (eplus or eplus_all(game))[0]
    if E.representation != "interval":
        raise ConfigError("potential_saddle needs an interval dual set")
    lo, hi = E.interval()
    op = game.blocks[0].op

    def value(x):
        lam = op.value(x)
        s = np.clip(2.0 * lam, lo, hi)
        return float(np.sum(s * lam - 0.25 * s * s)), s @ op.jacobian(x)

    x0 = game.meta.get("x_true") if start is None else start
    x0 = game.midpoint() if x0 is None else np.asarray(x0, dtype=float)
    bounds = [b for s in game.sets for b in zip(*s.bounds())]
    res = minimize(value, x0, jac=True, method="L-BFGS-B", bounds=bounds,
                   options={"ftol": 1e-16, "gtol": 1e-13, "maxiter": 10000})
    return res.x, np.clip(2.0 * op.value(res.x), lo, hi)


def build_logsumexp_game(seed=None, beta2_std=0.0, box=5.0, ball_radius=5.0, lam=0.2, c=1.0,
                         beta2=(2.0, 1.5), beta1=1.0):
    """Two scalar players with log-sum-exp payoffs.

    Player ``i`` pays ``beta1 [log(1 + e^{A_i}) + log(1 + e^{B_i})]`` with
    ``A_i = lam x_i^2 / 2 + c`` (a regulariser) and
    ``B_i = -x_i^2 - x_i x_j - beta2_i x_i``.  Player 1 lives in the box
    ``[-box, box]`` and player 2 in the ball of radius ``ball_radius``.
    With ``seed`` and ``beta2_std > 0`` the linear terms are perturbed by
    Gaussian noise.
    """
    b2 = np.asarray(beta2, dtype=float).reshape(2).copy()
    if seed is not None and beta2_std > 0:
        b2 = b2 + beta2_std * np.random.default_rng(seed).normal(size=2)
    sets = [Box([-box], [box]), Ball([0.0], ball_radius)]
    ops = []
    for i in range(2):
        j = 1 - i
        A = np.array([[[0.5 * lam]], [[-1.0]]])
        B = {j: np.array([[[0.0]], [[-1.0]]])}
        b = np.array([[0.0], [-b2[i]]])
        ops.append(QuadraticOperator.from_blocks([1, 1], i, A, b, [c, 0.0], B))
    psis = [ScaledLogistic(beta1), ScaledLogistic(beta1)]
    meta = {"lam": lam, "c": c, "beta2": b2.tolist(), "beta1": beta1}
    return GameSpec(sets, ops, psis, meta=meta, name="logsumexp-2p")


def logsumexp_inits(count=10, seed=0, extra=True):
    """Starting profiles: six fixed regions plus random draws in ``[-4.9, 4.9]^2``."""
    fixed = [[2.0, -2.5], [3.5, 4.25], [-4.0, -4.0], [0.0, -3.0], [-1.5, 3.5], [-4.0, -0.5]]
    rng = np.random.default_rng(seed)
    rand = list(rng.uniform(-4.9, 4.9, (max(count - len(fixed), 0), 2)))
    out = [np.array(p) for p in fixed] + [np.asarray(p) for p in rand]
    return out[:count]


def build_toy_game(omega1=(0.0, 1.0), omega2=(0.0, 1.0), d=0.1):
    """``J_i = ((x_1 - x_2)^2 - d)^2`` on intervals ``omega1`` and ``omega2``."""
    sets = [Box([omega1[0]], [omega1[1]]), Box([omega2[0]], [omega2[1]])]
    Q = np.array([[[1.0, -1.0], [-1.0, 1.0]]])
    op = QuadraticOperator(Q, np.zeros((1, 2)), [-float(d)])
    return GameSpec(sets, [op, op], [SumSquares(), SumSquares()], meta={"d": float(d)}, name="toy")


def build_quadratic_game(a=(2.0, 3.0), b_cross=(0.5, -0.4), b_lin=(-1.0, 0.5), c=10.0, box=2.0):
    """Convex two-player game ``J_i = Lambda_i^2`` with positive quadratic ``Lambda_i``.

    ``Lambda_i = a_i x_i^2 / 2 + b_cross_i x_i x_j + b_lin_i x_i + c``.  Since
    ``Lambda_i > 0`` on the box, the equilibrium solves
    ``a_i x_i + b_cross_i x_j + b_lin_i = 0``; it is stored in
    ``meta["x_ne"]``.
    """
    a = np.asarray(a, dtype=float)
    bc = np.asarray(b_cross, dtype=float)
    bl = np.asarray(b_lin, dtype=float)
    sets = [Box([-box], [box]), Box([-box], [box])]
    ops = []
    for i in range(2):
        j = 1 - i
        ops.append(QuadraticOperator.from_blocks([1, 1], i, [[[0.5 * a[i]]]], [[bl[i]]], [c],
                                                 {j: [[[bc[i]]]]}))
    M = np.array([[a[0], bc[0]], [bc[1], a[1]]])
    x_ne = np.linalg.solve(M, -bl)
    game = GameSpec(sets, ops, [SumSquares(), SumSquares()], meta={"x_ne": x_ne.tolist()}, name="convex-quadratic")
    lam_min = min(float(np.min(game.blocks[i].theta_lo)) for i in range(2))
    if lam_min <= 0:
        raise ConfigError("quadratic game: Lambda must stay positive on the box")
    return game


def build_monotone_game(beta=0.3, angle=0.7, half_width=0.5):
    """Strongly monotone two-player instance in the plane.

    ``Lambda_i = ||x_i||^2 / 4 + x_i' B_ij x_j + 1/2`` with
    ``B_12 = beta R`` and ``B_21 = -beta R'`` for a rotation ``R``, and
    ``psi = xi^2``.  The cross terms cancel in the symmetric part of the
    pseudo-gradient, so near the solution ``x = 0``, ``sigma = 1`` the
    modulus is about ``1/2``.
    """
    R = np.array([[np.cos(angle), -np.sin(angle)], [np.sin(angle), np.cos(angle)]])
    h = float(half_width)
    sets = [Box([-h, -h], [h, h]), Box([-h, -h], [h, h])]
    A = 0.25 * np.eye(2)[None]
    op1 = QuadraticOperator.from_blocks([2, 2], 0, A, None, [0.5], {1: beta * R[None]})
    op2 = QuadraticOperator.from_blocks([2, 2], 1, A, None, [0.5], {0: -beta * R.T[None]})
    meta = {"x_star": [0.0] * 4, "sigma_star": [1.0, 1.0], "beta": beta, "angle": angle}
    return GameSpec(sets, [op1, op2], [SumSquares(), SumSquares()], meta=meta, name="monotone")
