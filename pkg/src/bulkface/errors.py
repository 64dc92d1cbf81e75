"""Exception types raised across the package."""


class BulkfaceError(Exception):
    """Base class for all package errors."""


class ConfigurationError(BulkfaceError, ValueError):
    """Invalid coefficient, clamp or geometry configuration."""


class ModeError(BulkfaceError, ValueError):
    """Operation not available in the current geometry mode."""


class PicardDiverged(BulkfaceError):
    """Frozen-coefficient iteration did not reach its tolerance."""

    def __init__(self, message, residuals=()):
        super().__init__(message)
        self.residuals = list(residuals)


class LinearSolveFailed(BulkfaceError):
    """Inner linear solve was singular or did not converge."""


class StepSizeUnderflow(BulkfaceError):
    """Step halving went below the configured minimum step."""


class InsufficientDecayData(BulkfaceError):
    """Too few positive distances to fit an exponential rate."""


class EigenNotConverged(BulkfaceError):
    """Inverse iteration hit its iteration cap."""
