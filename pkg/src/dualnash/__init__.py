"""Global Nash equilibria of non-convex games by canonical duality."""

from .canonical import NegLog, ScaledLogistic, SumSquares, psi_from_dict
from .duality import (Certificate, DualFeasibleSet, certify, complementary_value, eplus_all,
                      eplus_build, p_matrix)
from .errors import (ConfigError, DivergenceError, DomainError, DualNashError, FitError,
                     UnsupportedRepresentation)
from .game import (GameSpec, QuadraticOperator, eval_lambda, eval_payoff, grad_lambda_xi,
                   grad_payoff, hessian_lambda)
from .mirror import (BallGenerator, GibbsEntropy, HalfSquaredNorm, IntervalEntropy, MapSet,
                     OrthantEntropy, bregman_div, conjugate_grad, default_map, default_maps,
                     generator_grad, generator_value, mirror_step)
from .ode import OdeState, equilibrium_state, fit_exponential_rate, integrate, lyapunov, ode_rhs
from .sets import Ball, Box, FullSpace, NonNegOrthant, Simplex
from .solver import (Constant, HarmonicKappa, InvSqrt, SolveResult, SolverConfig, estimate_constants,
                     solve, solve_baseline, step_general, step_potential)
from .vi import pseudo_gradient, stack, unstack, vi_residual

__all__ = [
    "Ball", "BallGenerator", "Box", "Certificate", "ConfigError", "Constant", "DivergenceError",
    "DomainError", "DualFeasibleSet", "DualNashError", "FitError", "FullSpace", "GameSpec",
    "GibbsEntropy", "HalfSquaredNorm", "HarmonicKappa", "IntervalEntropy", "InvSqrt", "MapSet",
    "NegLog", "NonNegOrthant", "OdeState", "OrthantEntropy", "QuadraticOperator", "ScaledLogistic",
    "Simplex", "SolveResult", "SolverConfig", "SumSquares", "UnsupportedRepresentation",
    "bregman_div", "certify", "complementary_value", "conjugate_grad", "default_map",
    "default_maps", "eplus_all", "eplus_build", "equilibrium_state", "estimate_constants",
    "eval_lambda", "eval_payoff", "fit_exponential_rate", "generator_grad", "generator_value",
    "grad_lambda_xi", "grad_payoff", "hessian_lambda", "integrate", "lyapunov", "mirror_step",
    "ode_rhs", "p_matrix", "pseudo_gradient", "psi_from_dict", "solve", "solve_baseline", "stack",
    "step_general", "step_potential", "unstack", "vi_residual",
]

__version__ = "0.1.0"
