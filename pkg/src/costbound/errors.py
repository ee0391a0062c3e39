"""Exception hierarchy shared by every calculator."""


class CostBoundError(Exception):
    """Base class for all errors raised by this package."""


class DomainError(CostBoundError, ValueError):
    """An input lies outside the domain where the operation is defined."""


class DimensionError(DomainError):
    """Two inputs that must share a shape or an atom list do not."""


class CapacityError(CostBoundError):
    """An exact enumeration would exceed its configured size limit."""


class ConvergenceError(CostBoundError, ArithmeticError):
    """Numerical integration did not reach the requested tolerance.

    The best available estimate is kept on ``estimate`` together with its
    error bound and the number of subdivisions used.
    """

    def __init__(self, message, estimate, error, subdivisions):
        super().__init__(message)
        self.estimate = estimate
        self.error = error
        self.subdivisions = subdivisions
