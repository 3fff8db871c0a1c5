"""Exception types raised by splinecrit."""


class SplineCritError(Exception):
    """Base class for all package errors."""


class DomainError(SplineCritError, ValueError):
    """A query point lies outside the unit parameter domain."""


class FitError(SplineCritError):
    """Least-squares fitting failed (e.g. rank-deficient normal equations)."""

    def __init__(self, message, axis=None):
        super().__init__(message)
        self.axis = axis


class ClassificationError(SplineCritError, ValueError):
    """The Hessian at a point is too close to singular to classify."""


class UnsupportedDimensionError(SplineCritError, ValueError):
    """The requested operation is not available in this dimension."""


class FormatError(SplineCritError, ValueError):
    """A file could not be parsed as the expected format."""
