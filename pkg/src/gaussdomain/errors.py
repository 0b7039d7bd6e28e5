"""Exception and warning types shared across the package."""


class GaussDomainError(Exception):
    """Base class for package errors."""


class InvalidArgumentError(GaussDomainError, ValueError):
    """An argument fails a precondition (shape, range, finiteness, grammar)."""


class SingularCovarianceError(InvalidArgumentError):
    """A covariance matrix is not positive definite within tolerance."""


class InvalidMethodError(InvalidArgumentError):
    """A computation method was requested for parameters it cannot handle."""


class InvalidValuesError(InvalidArgumentError):
    """A value matrix makes some correct response worth no more than an error."""


class DomainEvaluationError(GaussDomainError):
    """A domain function returned a non-finite value at a traced point."""


class UnboundedFunctionError(GaussDomainError):
    """A quantile bracket could not be established for a function's cdf."""


class InsufficientDataError(GaussDomainError):
    """Too few samples or usable points for the requested fit."""


class AccuracyWarning(RuntimeWarning):
    """A numeric routine missed its tolerance; carries the achieved bound."""

    def __init__(self, message: str, achieved_bound: float | None = None):
        super().__init__(message)
        self.achieved_bound = achieved_bound
