"""Exception and warning types shared across the package."""


class MmoptoError(Exception):
    """Base class for all package errors."""


class ConfigError(MmoptoError, ValueError):
    """Invalid model, drive or run configuration.

    ``path`` names the offending field (e.g. ``"modes[1].kappa_in_khz"``)
    when it is known.
    """

    def __init__(self, message, path=None):
        self.path = path
        self.message = message
        if path:
            message = f"{path}: {message}"
        super().__init__(message)


class ParseError(MmoptoError, ValueError):
    """Input data file does not match its documented schema."""


class CoverageError(MmoptoError, ValueError):
    """Input data does not cover the region a procedure needs."""


class InsufficientDataError(CoverageError):
    pass


class CrossingError(MmoptoError, ValueError):
    """The requested position is not an avoided crossing of the model."""


class ModelMismatchError(MmoptoError, ValueError):
    """Measured features cannot be produced by the model for any parameter value."""


class FitError(MmoptoError, RuntimeError):
    """A least-squares fit failed to converge.

    Carries the best residual norm reached and, when available, the
    optimizer trace (``list`` of cost values or a status message).
    """

    def __init__(self, message, best_residual=None, trace=None):
        self.best_residual = best_residual
        self.trace = trace
        super().__init__(message)


class InstabilityError(MmoptoError, RuntimeError):
    """Time-domain integration diverged (anti-damped mechanics)."""

    def __init__(self, message, time=None):
        self.time = time
        super().__init__(message)


class DegeneracyWarning(UserWarning):
    """Two fitted peaks are too close to be resolved independently."""


class BoundaryWarning(UserWarning):
    """A fitted parameter finished on one of its bounds."""


class ValidityWarning(UserWarning):
    """An approximation used by a calculation is outside its stated regime."""
