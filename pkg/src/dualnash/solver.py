"""
Discrete dual mirror-descent solvers and primal baselines.

The dual algorithm runs simultaneous (Jacobi) updates of every player's
decision variable and of every dual block:

    xi_b      = clip(grad psi_b*(sigma_b), Theta_b)
    x_i^+     = grad phi_i*(grad phi_i(x_i) - alpha sigma_b' grad_{x_i} Lambda_b(x))
    sigma_b^+ = grad varphi_b*(grad varphi_b(sigma_b) + alpha (Lambda_b(x) - xi_b))

In a potential game a single dual block is shared by all players.
"""

import csv
import json
from dataclasses import dataclass, field

import numpy as np

from .duality import DEFAULT_KAPPA_X, certify, eplus_all, split_sigma
from .errors import ConfigError, DivergenceError, DomainError
from .game import natural_duals, payoff_gradients
from .mirror import default_maps
from .vi import pseudo_gradient

DUAL_METHODS = ("alg1", "alg1_potential")
BASELINES = ("gd", "pgd", "omd", "eg", "sgd", "proximal")
METHODS = DUAL_METHODS + BASELINES


# ---------------------------------------------------------------- schedules
class Schedule:
    kind = "abstract"

    def __call__(self, k):
        raise NotImplementedError

    def to_dict(self):
        raise NotImplementedError

    def __repr__(self):
        return f"{type(self).__name__}({self.to_dict()})"


class HarmonicKappa(Schedule):
    """``alpha_k = 2 / (kappa (k + 1))``."""

    kind = "harmonic"

    def __init__(self, kappa):
        self.kappa = float(kappa)
        if not self.kappa > 0:
            raise ConfigError("harmonic schedule: kappa must be positive")

    def __call__(self, k):
        return 2.0 / (self.kappa * (k + 1))

    def to_dict(self):
        return {"kind": self.kind, "kappa": self.kappa}


class InvSqrt(Schedule):
    """``alpha_k = c / sqrt(k)``."""

    kind = "invsqrt"

    def __init__(self, c):
        self.c = float(c)
        if not self.c > 0:
            raise ConfigError("invsqrt schedule: c must be positive")

    def __call__(self, k):
        return self.c / np.sqrt(k)

    def to_dict(self):
        return {"kind": self.kind, "c": self.c}


class Constant(Schedule):
    """``alpha_k = alpha``."""

    kind = "constant"

    def __init__(self, alpha):
        self.alpha = float(alpha)
        if not self.alpha > 0:
            raise ConfigError("constant schedule: alpha must be positive")

    def __call__(self, k):
        return self.alpha

    def to_dict(self):
        return {"kind": self.kind, "alpha": self.alpha}


def schedule_from(spec):
    """Build a schedule from a dict, ``"kind:value"`` string or instance."""
    if isinstance(spec, Schedule):
        return spec
    if isinstance(spec, str):
        kind, _, val = spec.partition(":")
        if not val:
            raise ConfigError(f"schedule {spec!r}: expected 'kind:value'")
        try:
            val = float(val)
        except ValueError:
            raise ConfigError(f"schedule {spec!r}: value is not a number") from None
        spec = {"kind": kind, "value": val}
    if not isinstance(spec, dict):
        raise ConfigError(f"cannot interpret schedule {spec!r}")
    kind = str(spec.get("kind", "")).lower()
    if kind in ("harmonic", "harmonic_kappa", "harmonickappa"):
        return HarmonicKappa(spec.get("kappa", spec.get("value")))
    if kind in ("invsqrt", "inv_sqrt"):
        return InvSqrt(spec.get("c", spec.get("value")))
    if kind == "constant":
        return Constant(spec.get("alpha", spec.get("value")))
    raise ConfigError(f"unknown schedule kind {kind!r}")


# ---------------------------------------------------------------- configuration
@dataclass
class SolverConfig:
    """Solver settings.

    ``sigma_init`` is ``"natural"`` (projected ``grad psi(Lambda(x0))``),
    ``"zero"`` (projection of the origin), ``"midpoint"`` or an explicit
    dual vector.  ``z_star`` and ``gap_ref`` are optional reference pairs
    ``(x, sigma)`` for the recorded distance and duality gap.
    """

    method: str = "alg1"
    schedule: Schedule = field(default_factory=lambda: InvSqrt(1.0))
    iters: int = 1000
    ttol: float = 1e-3
    seed: int = 0
    kappa_x: float = DEFAULT_KAPPA_X
    tol_vi: float = None
    tol_dual: float = None
    sigma_init: object = "natural"
    sgd_std: float = None
    prox_rho: float = 1.0
    prox_inner: int = 5
    primal_maps: object = None
    dual_maps: object = None
    z_star: tuple = None
    gap_ref: tuple = None
    keep_iterates: bool = False

    def __post_init__(self):
        self.method = str(self.method).lower()
        if self.method == "alg1potential":
            self.method = "alg1_potential"
        if self.method not in METHODS:
            raise ConfigError(f"unknown method {self.method!r}; expected one of {', '.join(METHODS)}")
        self.schedule = schedule_from(self.schedule)
        self.iters = int(self.iters)
        if self.iters < 1:
            raise ConfigError("iters must be at least 1")
        self.ttol = float(self.ttol)
        if self.ttol < 0:
            raise ConfigError("ttol must be nonnegative")
        if not float(self.kappa_x) > 0:
            raise ConfigError("kappa_x must be positive")
        if self.prox_rho < 0 or int(self.prox_inner) < 1:
            raise ConfigError("proximal settings must satisfy rho >= 0 and inner >= 1")

    @classmethod
    def from_dict(cls, d):
        known = set(cls.__dataclass_fields__)
        extra = set(d) - known
        if extra:
            raise ConfigError(f"unknown solver options: {', '.join(sorted(extra))}")
        return cls(**d)

    def to_dict(self):
        out = {}
        for k in self.__dataclass_fields__:
            v = getattr(self, k)
            if isinstance(v, Schedule):
                v = v.to_dict()
            elif isinstance(v, tuple):
                v = [np.asarray(w).tolist() for w in v]
            elif isinstance(v, np.ndarray):
                v = v.tolist()
            out[k] = v
        return out


@dataclass
class SolveResult:
    """Final iterate, averages, certificate and per-iteration trace."""

    method: str
    x: np.ndarray
    sigma: np.ndarray
    x_avg: np.ndarray
    sigma_avg: np.ndarray
    certificate: object
    iterations: int
    converged: bool
    trace: dict
    iterates: list = None

    def summary(self):
        return {
            "method": self.method,
            "iterations": self.iterations,
            "converged": self.converged,
            "x": self.x.tolist(),
            "sigma": None if self.sigma is None else self.sigma.tolist(),
            "x_avg": self.x_avg.tolist(),
            "sigma_avg": None if self.sigma_avg is None else self.sigma_avg.tolist(),
            "certificate": self.certificate.to_dict(),
        }

    def to_json(self, path=None, indent=2):
        text = json.dumps(self.summary(), indent=indent)
        if path is not None:
            with open(path, "w") as fh:
                fh.write(text + "\n")
        return text

    def to_csv(self, path):
        """Per-iteration trace with columns ``k, alpha, dist_sq, gap, step_norm``."""
        cols = ("k", "alpha", "dist_sq", "gap", "step_norm")
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(cols)
            for row in zip(*(self.trace[c] for c in cols)):
                w.writerow([str(int(row[0]))] + [f"{v:.17g}" for v in row[1:]])


# ---------------------------------------------------------------- dual steps
def _xi(blk, sigma_b):
    return blk.psi.project_theta(sigma_b, blk.theta_lo, blk.theta_hi)


def _dual_step(game, maps, x, sigma, alpha):
    x_new = np.empty_like(x)
    s_new = np.empty_like(sigma)
    for b, blk in enumerate(game.blocks):
        sl = game.dual_slice(b)
        sb = sigma[sl]
        lam = blk.op.value(x)
        jac = blk.op.jacobian(x)
        g = sb @ jac
        for i in blk.owners:
            si = game.slice(i)
            x_new[si] = maps.primal[i].step(x[si], g[si], alpha)
        dm = maps.dual[b]
        s_new[sl] = dm.conj_grad(dm.grad(sb) + alpha * (lam - _xi(blk, sb)))
    return x_new, s_new


def step_general(game, maps, x, sigma, alpha):
    """One simultaneous update of every player and dual block."""
    x = game.check_profile(x)
    sigma = np.concatenate(split_sigma(game, sigma))
    return _dual_step(game, maps, x, sigma, float(alpha))


def step_potential(game, maps, x, sigma, alpha):
    """One update with the shared dual variable of a potential game."""
    if not game.potential:
        raise ConfigError("step_potential needs a potential game")
    return step_general(game, maps, x, sigma, alpha)


# ---------------------------------------------------------------- helpers
def _gamma_total(game, x, sigma):
    total = 0.0
    for b, blk in enumerate(game.blocks):
        sb = sigma[game.dual_slice(b)]
        total += float(sb @ blk.op.value(x) - blk.psi.conj_value(sb))
    return total


def duality_gap(game, x_avg, sigma_avg, x_ref, sigma_ref):
    """``Gamma(x_avg, sigma_ref) - Gamma(x_ref, sigma_avg)`` summed over blocks."""
    return _gamma_total(game, x_avg, sigma_ref) - _gamma_total(game, x_ref, sigma_avg)


def initial_sigma(game, eplus, x0, mode):
    if isinstance(mode, str):
        if mode == "natural":
            raw = natural_duals(game, x0)
        elif mode == "zero":
            raw = np.zeros(game.q_total)
        elif mode == "midpoint":
            return np.concatenate([E.midpoint() for E in eplus])
        else:
            raise ConfigError(f"unknown sigma_init {mode!r}")
    else:
        raw = np.asarray(mode, dtype=float).ravel()
        if raw.size != game.q_total:
            raise ConfigError(f"sigma_init has length {raw.size}, expected {game.q_total}")
    parts = split_sigma(game, raw)
    return np.concatenate([E.project(p) if E.projectable else p for E, p in zip(eplus, parts)])


def _init_x(game, init):
    x0 = game.midpoint() if init is None else game.check_profile(init).copy()
    if not game.is_feasible(x0):
        raise ConfigError("initial profile is outside the feasible set")
    return x0


def _ref(game, pair):
    if pair is None:
        return None
    return game.check_profile(pair[0]), np.concatenate(split_sigma(game, pair[1]))


def _empty_trace():
    return {"k": [], "alpha": [], "dist_sq": [], "gap": [], "step_norm": []}


# ---------------------------------------------------------------- solvers
def solve(game, maps=None, config=None, init=None, callback=None):
    """Run the dual mirror-descent algorithm and certify the final point.

    Stops after ``config.iters`` steps or once ``||z^{k+1} - z^k|| <= ttol``
    for the joint point ``z = (x, sigma)``.

    Raises
    ------
    ConfigError
        When a dual feasible set is empty.
    DivergenceError
        When an iterate becomes non-finite; the last finite iterate is kept.

    ``callback(k, x, sigma)`` is called after every step.
    """
    config = config or SolverConfig()
    if config.method in BASELINES:
        return solve_baseline(game, config, init, callback)
    if config.method == "alg1_potential" and not game.potential:
        raise ConfigError("alg1_potential needs a potential game")
    eplus = eplus_all(game, config.kappa_x)
    for b, E in enumerate(eplus):
        if E.is_empty():
            raise ConfigError(f"dual feasible set of block {b} is empty for kappa_x={config.kappa_x}")
    if maps is None:
        maps = default_maps(game, eplus, config.primal_maps, config.dual_maps)
    x = _init_x(game, init)
    sigma = initial_sigma(game, eplus, x, config.sigma_init)
    f_scale = float(np.linalg.norm(pseudo_gradient(game, np.concatenate([x, sigma]))))
    zs = _ref(game, config.z_star)
    gref = _ref(game, config.gap_ref)

    tr = _empty_trace()
    iterates = [(x.copy(), sigma.copy())] if config.keep_iterates else None
    wsum = 0.0
    x_acc = np.zeros_like(x)
    s_acc = np.zeros_like(sigma)
    converged = False
    k = 0
    for k in range(1, config.iters + 1):
        alpha = config.schedule(k)
        wsum += alpha
        x_acc += alpha * x
        s_acc += alpha * sigma
        try:
            with np.errstate(over="ignore", invalid="ignore"):
                x_new, s_new = _dual_step(game, maps, x, sigma, alpha)
        except (DomainError, FloatingPointError) as exc:
            raise DivergenceError(f"iteration {k}: {exc}", last_state=(x, sigma), iteration=k) from exc
        if not (np.all(np.isfinite(x_new)) and np.all(np.isfinite(s_new))):
            raise DivergenceError(f"iteration {k}: non-finite iterate", last_state=(x, sigma), iteration=k)
        # joint step: x can sit still on the boundary while sigma still moves
        step = float(np.sqrt(np.sum((x_new - x) ** 2) + np.sum((s_new - sigma) ** 2)))
        x, sigma = x_new, s_new
        if iterates is not None:
            iterates.append((x.copy(), sigma.copy()))
        if callback is not None:
            callback(k, x, sigma)
        x_avg, s_avg = x_acc / wsum, s_acc / wsum
        tr["k"].append(k)
        tr["alpha"].append(alpha)
        tr["dist_sq"].append(np.nan if zs is None else
                             float(np.sum((x - zs[0]) ** 2) + np.sum((sigma - zs[1]) ** 2)))
        tr["gap"].append(np.nan if gref is None else duality_gap(game, x_avg, s_avg, *gref))
        tr["step_norm"].append(step)
        if step <= config.ttol:
            converged = True
            break
    cert = certify(game, x, sigma, tol_vi=config.tol_vi, tol_dual=config.tol_dual,
                   kappa_x=config.kappa_x, eplus=eplus, f_scale=f_scale)
    return SolveResult(config.method, x, sigma, x_acc / wsum, s_acc / wsum, cert, k, converged,
                       {c: np.asarray(v, dtype=float) for c, v in tr.items()}, iterates)


def solve_baseline(game, config, init=None, callback=None):
    """Primal baselines; the final point is certified with ``sigma = grad psi(Lambda(x))``.

    ``gd`` takes unprojected simultaneous gradient steps, ``pgd`` projects,
    ``omd`` uses the optimistic correction ``2 g_k - g_{k-1}``, ``eg`` is
    extragradient, ``sgd`` is ``pgd`` with Gaussian gradient noise and
    ``proximal`` runs ``prox_inner`` projected steps on
    ``J_i + rho/2 ||x_i - x_i^k||^2``.
    """
    if config.method not in BASELINES:
        raise ConfigError(f"{config.method!r} is not a baseline method")
    eplus = eplus_all(game, config.kappa_x)
    x = _init_x(game, init)
    rng = np.random.default_rng(config.seed)
    g_prev = payoff_gradients(game, x)
    std = config.sgd_std if config.sgd_std is not None else 0.05 * float(np.linalg.norm(g_prev))
    zs = _ref(game, config.z_star)
    sigma0 = natural_duals(game, x)
    f_scale = float(np.linalg.norm(pseudo_gradient(game, np.concatenate([x, sigma0]))))

    def grad(v):
        return payoff_gradients(game, v)

    tr = _empty_trace()
    iterates = [(x.copy(), None)] if config.keep_iterates else None
    wsum = 0.0
    x_acc = np.zeros_like(x)
    converged = False
    k = 0
    m = config.method
    for k in range(1, config.iters + 1):
        alpha = config.schedule(k)
        wsum += alpha
        x_acc += alpha * x
        try:
            with np.errstate(over="ignore", invalid="ignore"):
                g = grad(x)
                if m == "gd":
                    x_new = x - alpha * g
                elif m == "pgd":
                    x_new = game.project(x - alpha * g)
                elif m == "omd":
                    x_new = game.project(x - alpha * (2.0 * g - g_prev))
                elif m == "eg":
                    x_half = game.project(x - alpha * g)
                    x_new = game.project(x - alpha * grad(x_half))
                elif m == "sgd":
                    x_new = game.project(x - alpha * (g + std * rng.standard_normal(x.size)))
                else:
                    u = x.copy()
                    for _ in range(int(config.prox_inner)):
                        gu = np.concatenate([
                            _partial_grad(game, i, u, x) + config.prox_rho * (u[game.slice(i)] - x[game.slice(i)])
                            for i in range(game.N)])
                        u = game.project(u - alpha * gu)
                    x_new = u
                g_prev = g
        except (DomainError, FloatingPointError) as exc:
            raise DivergenceError(f"iteration {k}: {exc}", last_state=(x, None), iteration=k) from exc
        if not np.all(np.isfinite(x_new)):
            raise DivergenceError(f"iteration {k}: non-finite iterate", last_state=(x, None), iteration=k)
        step = float(np.linalg.norm(x_new - x))
        x = x_new
        if iterates is not None:
            iterates.append((x.copy(), None))
        if callback is not None:
            callback(k, x, None)
        tr["k"].append(k)
        tr["alpha"].append(alpha)
        tr["dist_sq"].append(np.nan if zs is None else float(np.sum((x - zs[0]) ** 2)))
        tr["gap"].append(np.nan)
        tr["step_norm"].append(step)
        if step <= config.ttol:
            converged = True
            break
    try:
        sigma = natural_duals(game, x)
    except (DomainError, FloatingPointError):
        sigma = np.full(game.q_total, np.nan)
    cert = certify(game, x, sigma, tol_vi=config.tol_vi, tol_dual=config.tol_dual,
                   kappa_x=config.kappa_x, eplus=eplus, f_scale=f_scale)
    return SolveResult(m, x, sigma, x_acc / wsum, None, cert, k, converged,
                       {c: np.asarray(v, dtype=float) for c, v in tr.items()}, iterates)


def _partial_grad(game, i, u, x):
    """``grad_{x_i} J_i`` at ``(u_i, x_{-i})`` for the Jacobi proximal step."""
    from .game import grad_payoff

    v = x.copy()
    sl = game.slice(i)
    v[sl] = u[sl]
    return grad_payoff(game, i, v)


# ---------------------------------------------------------------- constants
def estimate_constants(game, maps=None, sample_count=200, seed=0, z_ref=None, radius=None,
                       kappa_x=DEFAULT_KAPPA_X, eplus=None):
    """Sampled constants for step-size schedules.

    Parameters
    ----------
    z_ref : tuple (x, sigma), optional
        Reference point; with ``radius`` the samples are drawn in a box of
        that half-width around it (clipped to the feasible set), otherwise
        over the whole working box of ``Omega x E+``.

    Returns
    -------
    dict
        ``kappa`` (smallest monotonicity quotient), ``mu`` (from the map
        moduli), ``M1`` and ``M2`` (largest sampled ``||F||^2``) and ``d``
        (largest Bregman distance from the samples to the reference).
    """
    if eplus is None:
        eplus = eplus_all(game, kappa_x)
    if maps is None:
        maps = default_maps(game, eplus)
    rng = np.random.default_rng(seed)
    lo_x = np.concatenate([s.bounds()[0] for s in game.sets])
    hi_x = np.concatenate([s.bounds()[1] for s in game.sets])
    lo_s = np.concatenate([E.rep_lo for E in eplus])
    hi_s = np.concatenate([E.rep_hi for E in eplus])
    lo, hi = np.concatenate([lo_x, lo_s]), np.concatenate([hi_x, hi_s])
    if z_ref is not None:
        zr = np.concatenate([np.asarray(z_ref[0], float), np.asarray(z_ref[1], float)])
        if radius is not None:
            lo, hi = np.maximum(lo, zr - radius), np.minimum(hi, zr + radius)
    if not (np.all(np.isfinite(lo)) and np.all(np.isfinite(hi))):
        raise ConfigError("estimate_constants needs a bounded working box; pass z_ref and radius")

    def proj(z):
        x, s = z[:game.n_total], z[game.n_total:]
        parts = split_sigma(game, s)
        return np.concatenate([game.project(x)] + [E.project(p) for E, p in zip(eplus, parts)])

    samples = [proj(rng.uniform(lo, hi)) for _ in range(sample_count)]
    # corners of the working box, where bounded linear fields peak
    dim = lo.size
    if dim <= 10:
        for bits in range(2 ** dim):
            mask = np.array([(bits >> j) & 1 for j in range(dim)], dtype=bool)
            samples.append(proj(np.where(mask, hi, lo)))
    F = [pseudo_gradient(game, z) for z in samples]
    M = max(float(f @ f) for f in F)
    kappa = np.inf
    n_pairs = min(len(samples) * 2, 4 * sample_count)
    for _ in range(n_pairs):
        a, b = rng.integers(len(samples), size=2)
        d = samples[a] - samples[b]
        nd = float(d @ d)
        if nd < 1e-14:
            continue
        kappa = min(kappa, float((F[a] - F[b]) @ d) / nd)
    mu_x = min(m.mu for m in maps.primal)
    mu_s = min(m.mu for m in maps.dual)
    mu = min(mu_x / 2.0, mu_s / 2.0)
    ref = samples[0] if z_ref is None else proj(np.concatenate([np.asarray(z_ref[0], float),
                                                               np.asarray(z_ref[1], float)]))
    dmax = 0.0
    for z in samples:
        dmax = max(dmax, _joint_bregman(game, maps, ref, z))
    return {"kappa": float(kappa), "mu": float(mu), "M1": M, "M2": M, "d": float(dmax)}


def _joint_bregman(game, maps, z_ref, z):
    total = 0.0
    x_r, x = z_ref[:game.n_total], z[:game.n_total]
    for i, m in enumerate(maps.primal):
        sl = game.slice(i)
        total += m.bregman(x_r[sl], x[sl])
    s_r, s = z_ref[game.n_total:], z[game.n_total:]
    for b, m in enumerate(maps.dual):
        sl = game.dual_slice(b)
        total += m.bregman(s_r[sl], s[sl])
    return total
