"""Exception types shared across oodlab."""

from __future__ import annotations


class OodlabError(Exception):
    """Base class for all oodlab errors."""


class DomainError(OodlabError, ValueError):
    """An argument lies outside the domain of the operation."""


class EstimationError(OodlabError):
    """A fit could not be computed from the given data."""


class SingularCovarianceError(EstimationError):
    """Pooled covariance is singular; a positive ridge is required."""


class EvaluationError(OodlabError, ArithmeticError):
    """An objective produced a non-finite value."""

    def __init__(self, message: str, point=None):
        super().__init__(message)
        self.point = point


class ConfigurationError(OodlabError, ValueError):
    """Inconsistent run or sampler configuration."""


class GradientError(OodlabError):
    """A weighted gradient needs samples from a side that is empty."""
