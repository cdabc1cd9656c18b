"""Exception types shared across the package."""


class DualNashError(Exception):
    """Base class for all package errors."""


class ConfigError(DualNashError, ValueError):
    """Malformed game, solver or experiment configuration."""


class DomainError(DualNashError, ValueError):
    """A value falls outside the domain of a function."""


class UnsupportedRepresentation(DualNashError):
    """An operation needs a projectable dual-set representation."""


class DivergenceError(DualNashError, FloatingPointError):
    """An iteration produced non-finite values.

    The last finite state is kept in ``last_state``.
    """

    def __init__(self, message, last_state=None, iteration=None):
        super().__init__(message)
        self.last_state = last_state
        self.iteration = iteration


class FitError(DualNashError, ValueError):
    """A rate or slope fit has a degenerate window."""
