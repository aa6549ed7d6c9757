"""Exception types raised across the package."""


class MultiscError(Exception):
    """Base class for all multisc errors."""


class PanelFormatError(MultiscError):
    """Raised when an input panel file violates the expected format."""


class NumericError(MultiscError):
    """Raised when a numerical routine fails (non-convergence, overflow)."""


class RankDeficiencyError(NumericError):
    """Raised when a linear system is singular or indefinite."""
