"""
Generating functions, their conjugate gradients and Bregman divergences.

Each map pairs a strongly convex generator ``phi`` with a target set.
``conj_grad`` returns ``argmin_{x in set} {-x'y + phi(x)}`` in closed form,
so a mirror step never leaves the set.
"""

import numpy as np
from scipy.special import expit, logsumexp, softmax

from .errors import ConfigError, DomainError
from .sets import Ball, Box, FullSpace, NonNegOrthant, Simplex

# distance kept from the boundary before taking logs
BOUNDARY_EPS = 1e-12
# points further outside the set than this are rejected rather than clamped
DOMAIN_TOL = 1e-9


class MirrorMap:
    """Base class of a generating function over a target set."""

    kind = "abstract"

    def __init__(self, target):
        self.target = target
        self.dim = target.dim

    #: strong convexity modulus with respect to the Euclidean norm
    mu = 1.0

    def value(self, x):
        raise NotImplementedError

    def grad(self, x):
        raise NotImplementedError

    def conj_grad(self, y):
        raise NotImplementedError

    def conj_value(self, y):
        raise NotImplementedError

    def bregman(self, x_prime, x):
        """``D(x', x) = phi(x') - phi(x) - (x' - x)' grad phi(x)``."""
        x_prime = np.asarray(x_prime, dtype=float)
        x = np.asarray(x, dtype=float)
        d = self.value(x_prime) - self.value(x) - (x_prime - x) @ self.grad(x)
        return max(float(d), 0.0)

    def conj_bregman(self, y, y_ref):
        """Bregman divergence of the conjugate, ``D_{phi*}(y, y_ref)``."""
        y = np.asarray(y, dtype=float)
        y_ref = np.asarray(y_ref, dtype=float)
        d = self.conj_value(y) - self.conj_value(y_ref) - self.conj_grad(y_ref) @ (y - y_ref)
        return max(float(d), 0.0)

    def step(self, x, g, alpha):
        """Mirror step ``conj_grad(grad(x) - alpha g)``."""
        return self.conj_grad(self.grad(x) - alpha * np.asarray(g, dtype=float))

    def _check(self, x):
        x = np.asarray(x, dtype=float)
        if x.shape != (self.dim,):
            x = x.reshape(-1)
            if x.size != self.dim:
                raise ConfigError(f"{self.kind}: expected dimension {self.dim}, got {x.size}")
        return x

    def _require_in(self, x):
        if not self.target.contains(x, DOMAIN_TOL):
            raise DomainError(f"{self.kind}: point outside the target set")

    def to_dict(self):
        return {"kind": self.kind}

    def __repr__(self):
        return f"{type(self).__name__}({self.to_dict()})"


class HalfSquaredNorm(MirrorMap):
    """``phi(x) = ||x||^2 / 2``; its conjugate gradient is the projection.

    The target may be any object with ``project`` and ``contains``, which
    includes dual feasible sets.
    """

    kind = "half_squared_norm"
    mu = 1.0

    def value(self, x):
        x = self._check(x)
        self._require_in(x)
        return 0.5 * float(x @ x)

    def grad(self, x):
        return self._check(x).copy()

    def conj_grad(self, y):
        return self.target.project(self._check(y))

    def conj_value(self, y):
        y = self._check(y)
        p = self.target.project(y)
        return float(y @ p - 0.5 * p @ p)


class GibbsEntropy(MirrorMap):
    """Negative entropy ``sum x log x`` on the simplex; conjugate is log-sum-exp.

    The gradient ``1 + log x`` is defined up to an additive constant along
    the all-ones direction, so ``grad(conj_grad(y))`` recovers ``y`` only
    modulo constants.
    """

    kind = "gibbs_entropy"
    mu = 1.0

    def __init__(self, target):
        if not isinstance(target, Simplex):
            raise ConfigError("gibbs_entropy needs a simplex target")
        super().__init__(target)

    def _clamp(self, x):
        x = self._check(x)
        self._require_in(x)
        return np.maximum(x, BOUNDARY_EPS)

    def value(self, x):
        x = self._clamp(x)
        return float(np.sum(x * np.log(x)))

    def grad(self, x):
        return 1.0 + np.log(self._clamp(x))

    def conj_grad(self, y):
        return softmax(self._check(y))

    def conj_value(self, y):
        return float(logsumexp(self._check(y)))


class IntervalEntropy(MirrorMap):
    """Two-sided entropy ``sum (x-a) log(x-a) + (b-x) log(b-x)`` on a box.

    The conjugate gradient is ``(a + b e^y) / (1 + e^y)`` per component,
    evaluated through the logistic function for overflow safety.
    """

    kind = "interval_entropy"

    def __init__(self, target=None, a=None, b=None):
        if target is None:
            target = Box(a, b)
        if not isinstance(target, Box) or not target.bounded:
            raise ConfigError("interval_entropy needs a bounded box target")
        super().__init__(target)
        self.a = target.lower
        self.b = target.upper
        self.width = self.b - self.a
        # the Hessian 1/(x-a) + 1/(b-x) is smallest at the midpoint
        self.mu = float(np.min(4.0 / self.width))

    def _clamp(self, x):
        x = self._check(x)
        self._require_in(x)
        return np.clip(x, self.a + BOUNDARY_EPS * self.width, self.b - BOUNDARY_EPS * self.width)

    def value(self, x):
        x = self._clamp(x)
        return float(np.sum((x - self.a) * np.log(x - self.a) + (self.b - x) * np.log(self.b - x)))

    def grad(self, x):
        x = self._clamp(x)
        return np.log(x - self.a) - np.log(self.b - x)

    def conj_grad(self, y):
        return self.a + self.width * expit(self._check(y))

    def conj_value(self, y):
        y = self._check(y)
        return float(np.sum(self.a * y + self.width * (np.logaddexp(0.0, y) - np.log(self.width))))

    def to_dict(self):
        return {"kind": self.kind, "a": self.a.tolist(), "b": self.b.tolist()}


class OrthantEntropy(MirrorMap):
    """Unnormalised entropy ``sum x log x - x`` on the nonnegative orthant.

    The modulus is only bounded on a working box ``[0, working_upper]``,
    where the Hessian ``1/x`` is at least ``1/working_upper``.
    """

    kind = "orthant_entropy"

    def __init__(self, target, working_upper=10.0):
        if not isinstance(target, NonNegOrthant):
            raise ConfigError("orthant_entropy needs a nonnegative orthant target")
        super().__init__(target)
        self.working_upper = float(working_upper)
        self.mu = 1.0 / self.working_upper

    def _clamp(self, x):
        x = self._check(x)
        self._require_in(x)
        return np.maximum(x, BOUNDARY_EPS)

    def value(self, x):
        x = self._clamp(x)
        return float(np.sum(x * np.log(x) - x))

    def grad(self, x):
        return np.log(self._clamp(x))

    def conj_grad(self, y):
        return np.exp(self._check(y))

    def conj_value(self, y):
        return float(np.sum(np.exp(self._check(y))))

    def to_dict(self):
        return {"kind": self.kind, "working_upper": self.working_upper}


class BallGenerator(MirrorMap):
    """``phi(x) = -sqrt(p^2 - ||x - w||^2)`` on the ball of radius ``p`` about ``w``.

    The conjugate gradient is ``w + p y / sqrt(1 + ||y||^2)``, which maps
    every ``y`` into the open ball.
    """

    kind = "ball_generator"

    def __init__(self, target=None, center=None, radius=None):
        if target is None:
            target = Ball(center, radius)
        if not isinstance(target, Ball):
            raise ConfigError("ball_generator needs a ball target")
        super().__init__(target)
        self.w = target.center
        self.p = target.radius
        self.mu = 1.0 / self.p

    def _slack(self, x):
        x = self._check(x)
        self._require_in(x)
        v = x - self.w
        # keep the square root away from zero on the boundary
        s2 = self.p ** 2 - v @ v
        return v, np.sqrt(max(s2, 2.0 * BOUNDARY_EPS * self.p ** 2))

    def value(self, x):
        _, s = self._slack(x)
        return -float(s)

    def grad(self, x):
        v, s = self._slack(x)
        return v / s

    def conj_grad(self, y):
        y = self._check(y)
        return self.w + self.p * y / np.sqrt(1.0 + y @ y)

    def conj_value(self, y):
        y = self._check(y)
        return float(self.w @ y + self.p * np.sqrt(1.0 + y @ y))

    def to_dict(self):
        return {"kind": self.kind, "center": self.w.tolist(), "radius": self.p}


def default_map(target):
    """Default generator for a constraint set."""
    if isinstance(target, Box):
        if target.bounded:
            return IntervalEntropy(target)
        return HalfSquaredNorm(target)
    if isinstance(target, Simplex):
        return GibbsEntropy(target)
    if isinstance(target, Ball):
        return BallGenerator(target)
    if isinstance(target, NonNegOrthant):
        return OrthantEntropy(target)
    if isinstance(target, FullSpace):
        return HalfSquaredNorm(target)
    return HalfSquaredNorm(target)


def map_from_dict(d, target):
    """Build a map over ``target`` from its tagged-union form."""
    kind = d.get("kind", "default")
    if kind == "default":
        return default_map(target)
    if kind in ("half_squared_norm", "euclidean"):
        return HalfSquaredNorm(target)
    if kind == "gibbs_entropy":
        return GibbsEntropy(target)
    if kind == "interval_entropy":
        return IntervalEntropy(target)
    if kind == "orthant_entropy":
        return OrthantEntropy(target, d.get("working_upper", 10.0))
    if kind == "ball_generator":
        return BallGenerator(target)
    raise ConfigError(f"unknown mirror map kind {kind!r}")


class MapSet:
    """Primal maps (one per player) and dual maps (one per dual block)."""

    def __init__(self, primal, dual):
        self.primal = list(primal)
        self.dual = list(dual)


# module-level functions mirroring the method names
def generator_value(m, x):
    return m.value(x)


def generator_grad(m, x):
    return m.grad(x)


def conjugate_grad(m, y):
    return m.conj_grad(y)


def bregman_div(m, x_prime, x):
    return m.bregman(x_prime, x)


def mirror_step(m, x, g, alpha):
    return m.step(x, g, alpha)


def default_maps(game, eplus, primal=None, dual=None):
    """Default primal maps per player and Euclidean dual maps per block.

    ``primal`` and ``dual`` may give tagged-union dicts (or ready maps)
    that override the defaults.
    """
    pm = []
    for i, s in enumerate(game.sets):
        spec = None if primal is None else primal[i] if isinstance(primal, (list, tuple)) else primal
        pm.append(spec if isinstance(spec, MirrorMap) else map_from_dict(spec or {}, s))
    dm = []
    for b, E in enumerate(eplus):
        spec = None if dual is None else dual[b] if isinstance(dual, (list, tuple)) else dual
        if isinstance(spec, MirrorMap):
            dm.append(spec)
        elif spec is None or spec.get("kind", "half_squared_norm") in ("half_squared_norm", "euclidean", "default"):
            dm.append(HalfSquaredNorm(E))
        elif spec.get("kind") == "interval_entropy":
            dm.append(IntervalEntropy(Box(*E.interval())))
        else:
            raise ConfigError(f"unsupported dual map {spec!r}")
    return MapSet(pm, dm)
