"""Exception types shared across the package."""


class NashLearnError(Exception):
    """Base class for all package errors."""


class DimensionMismatchError(NashLearnError):
    """An array argument has the wrong shape; the message names the player."""


class ConfigError(NashLearnError):
    """A config document is malformed; the message names the offending key."""


class NonFiniteError(NashLearnError):
    """A non-finite value appeared during evaluation or integration."""

    def __init__(self, message, t=None, component=None, partial=None):
        super().__init__(message)
        self.t = t
        self.component = component
        self.partial = partial


class GammaCollapseError(NashLearnError):
    """A least-squares gain matrix lost positive definiteness."""

    def __init__(self, message, t=None, partial=None):
        super().__init__(message)
        self.t = t
        self.partial = partial


class NoConvergenceError(NashLearnError):
    """An iterative solver exhausted its iteration budget."""

    def __init__(self, message, max_iter=None, last_residual=None):
        super().__init__(message)
        self.max_iter = max_iter
        self.last_residual = last_residual


class BasisMismatchError(NashLearnError):
    """A basis does not have the structure an operation requires."""
