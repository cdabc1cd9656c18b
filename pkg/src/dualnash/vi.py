"""
Variational-inequality form of the dual game.

The joint point is ``z = (x, sigma)`` with ``sigma`` stacked over dual
blocks.  The pseudo-gradient stacks ``sigma_i' grad_{x_i} Lambda_i`` for
the players and ``-Lambda_b + grad psi_b*(sigma_b)`` for the dual blocks.
"""

import numpy as np

from .errors import ConfigError, UnsupportedRepresentation
from .mirror import MapSet


def stack(x, sigma):
    return np.concatenate([np.asarray(x, dtype=float).ravel(), np.asarray(sigma, dtype=float).ravel()])


def unstack(game, z):
    z = np.asarray(z, dtype=float).ravel()
    if z.size != game.n_total + game.q_total:
        raise ConfigError(f"joint point has length {z.size}, expected {game.n_total + game.q_total}")
    return z[:game.n_total].copy(), z[game.n_total:].copy()


def primal_field(game, x, sigma):
    """Top block of the pseudo-gradient, ``sigma_i' grad_{x_i} Lambda_i(x)``."""
    out = np.empty(game.n_total)
    for b, blk in enumerate(game.blocks):
        jac = blk.op.jacobian(x)
        g = sigma[game.dual_slice(b)] @ jac
        for i in blk.owners:
            sl = game.slice(i)
            out[sl] = g[sl]
    return out


def dual_field(game, x, sigma):
    """Bottom block, ``-Lambda_b(x) + grad psi_b*(sigma_b)``."""
    out = np.empty(game.q_total)
    for b, blk in enumerate(game.blocks):
        sl = game.dual_slice(b)
        s = blk.psi.check_dual(sigma[sl], label=f"block {b} ")
        out[sl] = -blk.op.value(x) + blk.psi.conj_grad(s)
    return out


def pseudo_gradient(game, z):
    """``F(z)`` for the joint point ``z = (x, sigma)``."""
    x, sigma = unstack(game, z)
    return np.concatenate([primal_field(game, x, sigma), dual_field(game, x, sigma)])


def project_joint(game, eplus, z):
    """Euclidean projection onto ``Omega x E+`` blockwise."""
    x, sigma = unstack(game, z)
    xp = game.project(x)
    parts = []
    for b, E in enumerate(eplus):
        if not E.projectable:
            raise UnsupportedRepresentation(f"block {b}: dual set has no projectable representation")
        parts.append(E.project(sigma[game.dual_slice(b)]))
    return np.concatenate([xp, np.concatenate(parts)])


def _dual_sets(maps_or_sets):
    if isinstance(maps_or_sets, MapSet):
        return [m.target for m in maps_or_sets.dual]
    return list(maps_or_sets)


def vi_residual(game, maps_or_sets, z):
    """Natural-map residual ``||z - Proj(z - F(z))||``.

    The projection is Euclidean onto ``Omega`` and the stored dual-set
    representations, whichever mirror maps the solver itself used.
    """
    eplus = _dual_sets(maps_or_sets)
    z = np.asarray(z, dtype=float).ravel()
    F = pseudo_gradient(game, z)
    return float(np.linalg.norm(z - project_joint(game, eplus, z - F)))


def first_order_violation(game, eplus, z, rng, draws=1000):
    """Most negative ``(z' - z)' F(z)`` over random feasible ``z'``.

    The dual blocks are sampled in the working box and projected, so only
    projectable representations are supported.
    """
    x, sigma = unstack(game, z)
    F = pseudo_gradient(game, z)
    worst = np.inf
    xs = [s.sample(rng, draws) for s in game.sets]
    for t in range(draws):
        xp = np.concatenate([xi[t] for xi in xs])
        sp = []
        for b, E in enumerate(eplus):
            s0 = sigma[game.dual_slice(b)]
            lo = np.where(np.isfinite(E.rep_lo), E.rep_lo, s0 - 10.0)
            hi = np.where(np.isfinite(E.rep_hi), E.rep_hi, s0 + 10.0)
            sp.append(E.project(rng.uniform(lo, hi)))
        zp = np.concatenate([xp, np.concatenate(sp)])
        worst = min(worst, float((zp - z) @ F))
    return worst


def monotonicity_modulus(game, sampler, rng, pairs=500):
    """Smallest sampled ``(F(z) - F(z'))'(z - z') / ||z - z'||^2``.

    ``sampler(rng)`` returns a joint point.
    """
    kappa = np.inf
    for _ in range(pairs):
        z1, z2 = sampler(rng), sampler(rng)
        d = z1 - z2
        nd = d @ d
        if nd == 0:
            continue
        kappa = min(kappa, float((pseudo_gradient(game, z1) - pseudo_gradient(game, z2)) @ d / nd))
    return kappa
