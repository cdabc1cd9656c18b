"""
Canonical functions and their Legendre conjugates.

A canonical function ``psi`` acts separably on the components of a vector
``xi`` and the payoff is the sum over components.  Each kind knows its
natural primal domain ``Theta`` and the image ``Theta*`` of that domain
under the gradient, which is one-to-one.
"""

import numpy as np
from scipy.special import expit, logit

from .errors import ConfigError, DomainError

# relative margin that keeps open dual domains away from log singularities
EPS_DOM = 1e-9


class CanonicalFunction:
    """Base class: separable convex function with invertible gradient."""

    kind = "abstract"

    #: natural primal domain (open interval per component)
    domain = (-np.inf, np.inf)

    def value(self, xi):
        return float(np.sum(self.elementwise(xi)))

    def elementwise(self, xi):
        """Per-component values, broadcasting over leading axes."""
        raise NotImplementedError

    def grad(self, xi):
        raise NotImplementedError

    def conj_value(self, sigma):
        raise NotImplementedError

    def conj_grad(self, sigma):
        raise NotImplementedError

    def conj_hess_diag(self, sigma):
        """Diagonal of the Hessian of the conjugate (it is separable)."""
        raise NotImplementedError

    def dual_domain(self):
        """Closed working version of the open dual domain."""
        lo, hi = self.grad_limits()
        return lo, hi

    def grad_limits(self):
        raise NotImplementedError

    def dual_bounds(self, theta_lo, theta_hi):
        """Image of the primal box ``[theta_lo, theta_hi]`` under the gradient.

        The gradient is increasing, so the endpoints map to endpoints.
        Infinite or open ends are replaced by the shrunken dual domain.
        """
        theta_lo = np.asarray(theta_lo, dtype=float)
        theta_hi = np.asarray(theta_hi, dtype=float)
        dlo, dhi = self.dual_domain()
        with np.errstate(divide="ignore", over="ignore", invalid="ignore"):
            lo = np.where(np.isfinite(theta_lo) & (theta_lo > self.domain[0]),
                          self.grad(np.where(np.isfinite(theta_lo), theta_lo, 1.0)), dlo)
            hi = np.where(np.isfinite(theta_hi) & (theta_hi < self.domain[1]),
                          self.grad(np.where(np.isfinite(theta_hi), theta_hi, 1.0)), dhi)
        return np.maximum(lo, dlo), np.minimum(hi, dhi)

    def project_theta(self, sigma, theta_lo, theta_hi):
        """``argmin_{xi in Theta} -sigma.xi + psi(xi)``, i.e. clipped conjugate gradient."""
        return np.clip(self.conj_grad(sigma), theta_lo, theta_hi)

    def check_primal(self, xi, label=""):
        xi = np.asarray(xi, dtype=float)
        bad = ~((xi > self.domain[0]) & (xi < self.domain[1]))
        if np.any(bad):
            k = int(np.flatnonzero(bad)[0])
            raise DomainError(f"{label}component {k}: value {xi[k]:.6g} outside the domain of {self.kind}")
        return xi

    def check_dual(self, sigma, label=""):
        sigma = np.asarray(sigma, dtype=float)
        lo, hi = self.grad_limits()
        bad = ~((sigma > lo) & (sigma < hi))
        if np.any(bad):
            k = int(np.flatnonzero(bad)[0])
            raise DomainError(f"{label}component {k}: dual value {sigma[k]:.6g} outside the dual domain of {self.kind}")
        return sigma

    def to_dict(self):
        return {"kind": self.kind}

    def __repr__(self):
        return f"{type(self).__name__}({self.to_dict()})"


class SumSquares(CanonicalFunction):
    """``psi(xi) = xi.xi`` with conjugate ``sigma.sigma / 4``."""

    kind = "sum_squares"

    def elementwise(self, xi):
        return np.asarray(xi, dtype=float) ** 2

    def grad(self, xi):
        return 2.0 * np.asarray(xi, dtype=float)

    def conj_value(self, sigma):
        sigma = np.asarray(sigma, dtype=float)
        return float(sigma @ sigma) / 4.0

    def conj_grad(self, sigma):
        return 0.5 * np.asarray(sigma, dtype=float)

    def conj_hess_diag(self, sigma):
        return np.full(np.shape(sigma), 0.5)

    def grad_limits(self):
        return -np.inf, np.inf

    def dual_domain(self):
        return -np.inf, np.inf


class ScaledLogistic(CanonicalFunction):
    """``psi(xi) = beta1 * log(1 + exp(xi))`` applied per component.

    The dual domain is the open interval ``(0, beta1)``; the working dual
    domain is shrunk by a relative margin of ``EPS_DOM``.
    """

    kind = "scaled_logistic"

    def __init__(self, beta1=1.0):
        beta1 = float(beta1)
        if not beta1 > 0:
            raise ConfigError("scaled_logistic: beta1 must be positive")
        self.beta1 = beta1

    def elementwise(self, xi):
        return self.beta1 * np.logaddexp(0.0, np.asarray(xi, dtype=float))

    def grad(self, xi):
        return self.beta1 * expit(np.asarray(xi, dtype=float))

    def conj_value(self, sigma):
        s = np.asarray(sigma, dtype=float) / self.beta1
        s = np.clip(s, EPS_DOM, 1.0 - EPS_DOM)
        return float(self.beta1 * np.sum(s * np.log(s) + (1.0 - s) * np.log1p(-s)))

    def conj_grad(self, sigma):
        s = np.asarray(sigma, dtype=float) / self.beta1
        return logit(np.clip(s, EPS_DOM, 1.0 - EPS_DOM))

    def conj_hess_diag(self, sigma):
        s = np.clip(np.asarray(sigma, dtype=float) / self.beta1, EPS_DOM, 1.0 - EPS_DOM)
        return 1.0 / (self.beta1 * s * (1.0 - s))

    def grad_limits(self):
        return 0.0, self.beta1

    def dual_domain(self):
        return self.beta1 * EPS_DOM, self.beta1 * (1.0 - EPS_DOM)

    def to_dict(self):
        return {"kind": self.kind, "beta1": self.beta1}


class NegLog(CanonicalFunction):
    """``psi(xi) = -log(xi)`` on ``xi > 0``; the dual domain is ``sigma < 0``."""

    kind = "neg_log"
    domain = (0.0, np.inf)

    def value(self, xi):
        return float(np.sum(self.elementwise(self.check_primal(xi))))

    def elementwise(self, xi):
        with np.errstate(divide="ignore", invalid="ignore"):
            return -np.log(np.asarray(xi, dtype=float))

    def grad(self, xi):
        return -1.0 / np.asarray(xi, dtype=float)

    def conj_value(self, sigma):
        sigma = np.asarray(sigma, dtype=float)
        return float(np.sum(-1.0 - np.log(-sigma)))

    def conj_grad(self, sigma):
        return -1.0 / np.asarray(sigma, dtype=float)

    def conj_hess_diag(self, sigma):
        return 1.0 / np.asarray(sigma, dtype=float) ** 2

    def grad_limits(self):
        return -np.inf, 0.0

    def dual_domain(self):
        return -np.inf, -EPS_DOM


def psi_from_dict(d):
    """Build a canonical function from its tagged-union JSON form."""
    kind = d.get("kind")
    if kind in ("sum_squares", "sumsquares"):
        return SumSquares()
    if kind in ("scaled_logistic", "logistic"):
        return ScaledLogistic(d.get("beta1", 1.0))
    if kind in ("neg_log", "neglog"):
        return NegLog()
    raise ConfigError(f"unknown canonical function kind {kind!r}")
