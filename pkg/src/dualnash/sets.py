"""
Constraint sets for player strategies.

Every set exposes a membership test, a Euclidean projection, a bounding
box and a sampler, which is all the solvers and oracles need.
"""

import numpy as np

from .errors import ConfigError


class ConstraintSet:
    """Base class for the feasible set of a single player."""

    kind = "abstract"

    def __init__(self, dim):
        self.dim = int(dim)
        if self.dim < 1:
            raise ConfigError(f"{self.kind}: dimension must be positive, got {dim}")

    def contains(self, x, tol=1e-9):
        raise NotImplementedError

    def project(self, x):
        raise NotImplementedError

    def bounds(self):
        """Axis-aligned box enclosing the set, possibly with infinite sides."""
        raise NotImplementedError

    def midpoint(self):
        raise NotImplementedError

    def sample(self, rng, m):
        raise NotImplementedError

    @property
    def bounded(self):
        lo, hi = self.bounds()
        return bool(np.all(np.isfinite(lo)) and np.all(np.isfinite(hi)))

    def to_dict(self):
        raise NotImplementedError

    def _check(self, x):
        x = np.asarray(x, dtype=float)
        if x.shape[-1] != self.dim:
            raise ConfigError(f"{self.kind}: expected dimension {self.dim}, got {x.shape[-1]}")
        return x

    def __repr__(self):
        return f"{type(self).__name__}({self.to_dict()})"


class Box(ConstraintSet):
    """Box ``lower <= x <= upper``."""

    kind = "box"

    def __init__(self, lower, upper):
        lower = np.atleast_1d(np.asarray(lower, dtype=float))
        upper = np.atleast_1d(np.asarray(upper, dtype=float))
        if lower.shape != upper.shape or lower.ndim != 1:
            raise ConfigError("box: lower and upper must be vectors of equal length")
        if not np.all(lower < upper):
            raise ConfigError("box: lower < upper must hold componentwise")
        super().__init__(lower.size)
        self.lower = lower
        self.upper = upper

    def contains(self, x, tol=1e-9):
        x = self._check(x)
        return bool(np.all(x >= self.lower - tol) and np.all(x <= self.upper + tol))

    def project(self, x):
        return np.clip(self._check(x), self.lower, self.upper)

    def bounds(self):
        return self.lower.copy(), self.upper.copy()

    def midpoint(self):
        lo, hi = self.lower, self.upper
        mid = 0.5 * (lo + hi)
        # half-infinite sides: step one unit inside the finite end
        mid = np.where(np.isfinite(lo) & ~np.isfinite(hi), lo + 1.0, mid)
        mid = np.where(~np.isfinite(lo) & np.isfinite(hi), hi - 1.0, mid)
        mid = np.where(~np.isfinite(lo) & ~np.isfinite(hi), 0.0, mid)
        return mid

    def sample(self, rng, m):
        if not self.bounded:
            raise ConfigError("box: cannot sample an unbounded box")
        return rng.uniform(self.lower, self.upper, size=(m, self.dim))

    def to_dict(self):
        return {"kind": "box", "lower": self.lower.tolist(), "upper": self.upper.tolist()}


class Simplex(ConstraintSet):
    """Probability simplex ``{x >= 0, sum(x) = 1}``."""

    kind = "simplex"

    def contains(self, x, tol=1e-9):
        x = self._check(x)
        return bool(np.all(x >= -tol) and abs(x.sum() - 1.0) <= tol * max(1, self.dim))

    def project(self, x):
        # sort-based projection onto the simplex
        x = self._check(x)
        u = np.sort(x)[::-1]
        css = np.cumsum(u) - 1.0
        ind = np.arange(1, self.dim + 1)
        rho = np.nonzero(u - css / ind > 0)[0][-1]
        theta = css[rho] / (rho + 1.0)
        return np.maximum(x - theta, 0.0)

    def bounds(self):
        return np.zeros(self.dim), np.ones(self.dim)

    def midpoint(self):
        return np.full(self.dim, 1.0 / self.dim)

    def sample(self, rng, m):
        return rng.dirichlet(np.ones(self.dim), size=m)

    def to_dict(self):
        return {"kind": "simplex", "dim": self.dim}


class Ball(ConstraintSet):
    """Euclidean ball ``||x - center|| <= radius``."""

    kind = "ball"

    def __init__(self, center, radius):
        center = np.atleast_1d(np.asarray(center, dtype=float))
        radius = float(radius)
        if not radius > 0:
            raise ConfigError("ball: radius must be positive")
        super().__init__(center.size)
        self.center = center
        self.radius = radius

    def contains(self, x, tol=1e-9):
        x = self._check(x)
        return bool(np.linalg.norm(x - self.center) <= self.radius + tol)

    def project(self, x):
        x = self._check(x)
        v = x - self.center
        nv = np.linalg.norm(v)
        if nv <= self.radius:
            return x.copy()
        return self.center + v * (self.radius / nv)

    def bounds(self):
        return self.center - self.radius, self.center + self.radius

    def midpoint(self):
        return self.center.copy()

    def sample(self, rng, m):
        g = rng.standard_normal((m, self.dim))
        g /= np.linalg.norm(g, axis=1, keepdims=True)
        r = self.radius * rng.uniform(size=(m, 1)) ** (1.0 / self.dim)
        return self.center + r * g

    def to_dict(self):
        return {"kind": "ball", "center": self.center.tolist(), "radius": self.radius}


class NonNegOrthant(ConstraintSet):
    """Nonnegative orthant ``x >= 0``."""

    kind = "orthant"

    def contains(self, x, tol=1e-9):
        return bool(np.all(self._check(x) >= -tol))

    def project(self, x):
        return np.maximum(self._check(x), 0.0)

    def bounds(self):
        return np.zeros(self.dim), np.full(self.dim, np.inf)

    def midpoint(self):
        return np.ones(self.dim)

    def sample(self, rng, m):
        raise ConfigError("orthant: cannot sample an unbounded set without a working box")

    def to_dict(self):
        return {"kind": "orthant", "dim": self.dim}


class FullSpace(ConstraintSet):
    """The whole space ``R^dim``."""

    kind = "full"

    def contains(self, x, tol=1e-9):
        return bool(np.all(np.isfinite(self._check(x))))

    def project(self, x):
        return self._check(x).copy()

    def bounds(self):
        return np.full(self.dim, -np.inf), np.full(self.dim, np.inf)

    def midpoint(self):
        return np.zeros(self.dim)

    def sample(self, rng, m):
        raise ConfigError("full: cannot sample an unbounded set without a working box")

    def to_dict(self):
        return {"kind": "full", "dim": self.dim}


def set_from_dict(d):
    """Build a constraint set from its tagged-union JSON form."""
    try:
        kind = d["kind"]
        if kind == "box":
            return Box(d["lower"], d["upper"])
        if kind == "simplex":
            return Simplex(d["dim"])
        if kind == "ball":
            return Ball(d["center"], d["radius"])
        if kind in ("orthant", "nonneg_orthant"):
            return NonNegOrthant(d["dim"])
        if kind in ("full", "full_space"):
            return FullSpace(d["dim"])
    except KeyError as exc:
        raise ConfigError(f"constraint set missing field {exc}") from None
    raise ConfigError(f"unknown constraint set kind {d.get('kind')!r}")
