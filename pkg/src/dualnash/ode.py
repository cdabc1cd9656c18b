"""
Conjugate-based flow in the mirror coordinates.

The state is ``(y, nu)`` with ``x = grad phi*(y)`` and
``sigma = grad varphi*(nu)``; its right-hand side is

    y'  = -sigma' grad_x Lambda(x) + grad phi(x) - y
    nu' = Lambda(x) - grad psi*(sigma) + grad varphi(sigma) - nu

so feasibility holds by construction.  Integration is explicit RK4.
"""

import csv
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, DivergenceError, FitError
from .vi import dual_field, primal_field

DEFAULT_DT = 1e-2
DT_MAX = 0.1


@dataclass
class OdeState:
    """Mirror coordinates ``y`` (players) and ``nu`` (dual blocks) at time ``t``."""

    y: np.ndarray
    nu: np.ndarray
    t: float = 0.0

    def vector(self):
        return np.concatenate([self.y, self.nu])


def _split(game, v, primal=True):
    if primal:
        return [v[game.slice(i)] for i in range(game.N)]
    return [v[game.dual_slice(b)] for b in range(len(game.blocks))]


def primal_point(game, maps, y):
    return np.concatenate([m.conj_grad(yi) for m, yi in zip(maps.primal, _split(game, y))])


def dual_point(game, maps, nu):
    return np.concatenate([m.conj_grad(ni) for m, ni in zip(maps.dual, _split(game, nu, False))])


def state_point(game, maps, s):
    """Joint point ``(x, sigma)`` of a state."""
    return primal_point(game, maps, s.y), dual_point(game, maps, s.nu)


def _grad_primal(game, maps, x):
    return np.concatenate([m.grad(xi) for m, xi in zip(maps.primal, _split(game, x))])


def _grad_dual(game, maps, sigma):
    return np.concatenate([m.grad(si) for m, si in zip(maps.dual, _split(game, sigma, False))])


def _rhs_vec(game, maps, y, nu):
    x = primal_point(game, maps, y)
    sigma = dual_point(game, maps, nu)
    dy = -primal_field(game, x, sigma) + _grad_primal(game, maps, x) - y
    dnu = -dual_field(game, x, sigma) + _grad_dual(game, maps, sigma) - nu
    return dy, dnu


def ode_rhs(game, maps, s):
    """Time derivatives ``(y', nu')`` at state ``s``."""
    return _rhs_vec(game, maps, np.asarray(s.y, dtype=float), np.asarray(s.nu, dtype=float))


def default_init(game, maps):
    """``y = grad phi(mid Omega)`` and ``nu = grad varphi(mid E+)``."""
    y = np.concatenate([m.grad(s.midpoint()) for m, s in zip(maps.primal, game.sets)])
    nu = np.concatenate([m.grad(m.target.midpoint()) for m in maps.dual])
    return OdeState(y, nu, 0.0)


def init_from_point(game, maps, x, sigma):
    """State whose mapped point is ``(x, sigma)`` (for interior points)."""
    return OdeState(_grad_primal(game, maps, np.asarray(x, dtype=float)),
                    _grad_dual(game, maps, np.asarray(sigma, dtype=float)), 0.0)


def equilibrium_state(game, maps, x, sigma):
    """Mirror coordinates of an equilibrium built from a certified pair."""
    x = np.asarray(x, dtype=float)
    sigma = np.asarray(sigma, dtype=float)
    y = -primal_field(game, x, sigma) + _grad_primal(game, maps, x)
    nu = -dual_field(game, x, sigma) + _grad_dual(game, maps, sigma)
    return OdeState(y, nu, 0.0)


@dataclass
class OdeTrace:
    """Recorded trajectory."""

    t: np.ndarray
    x: np.ndarray
    sigma: np.ndarray
    y: np.ndarray
    nu: np.ndarray
    dist: np.ndarray
    meta: dict = field(default_factory=dict)

    def final_state(self):
        return OdeState(self.y[-1].copy(), self.nu[-1].copy(), float(self.t[-1]))

    def to_csv(self, path):
        write_trace_csv(path, self)


def integrate(game, maps, init, dt=DEFAULT_DT, t_end=10.0, z_star=None, record_every=1):
    """Integrate with classical RK4 at fixed step ``dt``.

    Parameters
    ----------
    z_star : tuple (x, sigma), optional
        Reference equilibrium for the recorded distance ``||z(t) - z*||``.
    record_every : int
        Record one state every this many steps (the last one is always kept).

    Raises
    ------
    DivergenceError
        When the state becomes non-finite; ``last_state`` holds the last
        finite state.
    """
    dt = float(dt)
    if not 0 < dt <= DT_MAX:
        raise ConfigError(f"ode: dt must be in (0, {DT_MAX}], got {dt}")
    if not t_end > 0:
        raise ConfigError("ode: t_end must be positive")
    n_steps = int(np.ceil(t_end / dt - 1e-9))
    y = np.asarray(init.y, dtype=float).copy()
    nu = np.asarray(init.nu, dtype=float).copy()
    t0 = float(init.t)
    zs = None if z_star is None else np.concatenate([np.asarray(z_star[0], float), np.asarray(z_star[1], float)])

    rec_t, rec_x, rec_s, rec_y, rec_nu, rec_d = [], [], [], [], [], []

    def record(t, y, nu):
        x = primal_point(game, maps, y)
        s = dual_point(game, maps, nu)
        rec_t.append(t)
        rec_x.append(x)
        rec_s.append(s)
        rec_y.append(y.copy())
        rec_nu.append(nu.copy())
        rec_d.append(np.nan if zs is None else float(np.linalg.norm(np.concatenate([x, s]) - zs)))

    record(t0, y, nu)
    for step in range(1, n_steps + 1):
        with np.errstate(over="ignore", invalid="ignore"):
            try:
                k1y, k1n = _rhs_vec(game, maps, y, nu)
                k2y, k2n = _rhs_vec(game, maps, y + 0.5 * dt * k1y, nu + 0.5 * dt * k1n)
                k3y, k3n = _rhs_vec(game, maps, y + 0.5 * dt * k2y, nu + 0.5 * dt * k2n)
                k4y, k4n = _rhs_vec(game, maps, y + dt * k3y, nu + dt * k3n)
            except (FloatingPointError, ValueError) as exc:
                raise DivergenceError(f"ode: evaluation failed at t={t0 + (step - 1) * dt:.6g}: {exc}",
                                      last_state=OdeState(y, nu, t0 + (step - 1) * dt), iteration=step) from exc
            y_new = y + dt / 6.0 * (k1y + 2 * k2y + 2 * k3y + k4y)
            nu_new = nu + dt / 6.0 * (k1n + 2 * k2n + 2 * k3n + k4n)
        if not (np.all(np.isfinite(y_new)) and np.all(np.isfinite(nu_new))):
            raise DivergenceError(f"ode: non-finite state at t={t0 + step * dt:.6g}",
                                  last_state=OdeState(y, nu, t0 + (step - 1) * dt), iteration=step)
        y, nu = y_new, nu_new
        if step % record_every == 0 or step == n_steps:
            record(t0 + step * dt, y, nu)
    return OdeTrace(np.array(rec_t), np.array(rec_x), np.array(rec_s), np.array(rec_y),
                    np.array(rec_nu), np.array(rec_d), {"dt": dt, "t_end": float(t_end)})


def lyapunov(game, maps, state, eq_state):
    """``V1 = sum D_{phi*}(y, y*) + sum D_{varphi*}(nu, nu*)``."""
    total = 0.0
    for m, yi, ye in zip(maps.primal, _split(game, state.y), _split(game, eq_state.y)):
        total += m.conj_bregman(yi, ye)
    for m, ni, ne in zip(maps.dual, _split(game, state.nu, False), _split(game, eq_state.nu, False)):
        total += m.conj_bregman(ni, ne)
    return total


def lyapunov_trace(game, maps, trace, eq_state):
    return np.array([lyapunov(game, maps, OdeState(y, nu), eq_state) for y, nu in zip(trace.y, trace.nu)])


@dataclass
class RateEstimate:
    """Fitted exponential rate of ``||z(t) - z*||``."""

    rate: float
    r2: float
    intercept: float
    bound: float = None


def fit_exponential_rate(t, dist, kappa=None, tau=None):
    """Least-squares fit of ``log dist`` against ``t`` on the middle 80%.

    ``bound`` is ``kappa / (2 tau)`` when both constants are supplied.
    """
    t = np.asarray(t, dtype=float)
    dist = np.asarray(dist, dtype=float)
    if t.size < 10:
        raise FitError("rate fit needs at least 10 samples")
    lo, hi = int(np.floor(0.1 * t.size)), int(np.ceil(0.9 * t.size))
    tw, dw = t[lo:hi], dist[lo:hi]
    if np.any(~np.isfinite(dw)) or np.any(dw <= 0):
        raise FitError("rate fit needs positive distances on the fit window")
    ld = np.log(dw)
    if np.ptp(ld) == 0 or np.ptp(tw) == 0:
        raise FitError("rate fit window is degenerate")
    A = np.vstack([tw, np.ones_like(tw)]).T
    (slope, icpt), *_ = np.linalg.lstsq(A, ld, rcond=None)
    resid = ld - A @ np.array([slope, icpt])
    ss_tot = np.sum((ld - ld.mean()) ** 2)
    r2 = 1.0 - np.sum(resid ** 2) / ss_tot
    bound = None if kappa is None or tau is None else kappa / (2.0 * tau)
    return RateEstimate(float(slope), float(r2), float(icpt), bound)


def write_trace_csv(path, trace):
    """Columns ``t, x_1..x_n, sigma_1..sigma_q, dist`` at 17 significant digits."""
    n = trace.x.shape[1]
    q = trace.sigma.shape[1]
    header = ["t"] + [f"x_{j + 1}" for j in range(n)] + [f"sigma_{j + 1}" for j in range(q)] + ["dist"]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for t, x, s, d in zip(trace.t, trace.x, trace.sigma, trace.dist):
            w.writerow([f"{v:.17g}" for v in np.concatenate([[t], x, s, [d]])])
