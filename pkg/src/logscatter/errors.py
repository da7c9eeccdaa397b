"""Exception hierarchy shared by all modules."""


class LogScatterError(Exception):
    """Base class for errors raised by this package."""


class DomainError(LogScatterError, ValueError):
    """An argument lies outside the domain of a formula."""


class MatrixRangeError(LogScatterError, OverflowError):
    """A matrix function overflowed double precision."""


class NonConvergenceError(LogScatterError, RuntimeError):
    """An iterative refinement or horizon extension failed to converge.

    Attributes
    ----------
    estimate
        Last available estimate (may be ``None``).
    report
        Diagnostic object describing the failed attempt (may be ``None``).
    """

    def __init__(self, message, estimate=None, report=None):
        super().__init__(message)
        self.estimate = estimate
        self.report = report


class QuadratureError(NonConvergenceError):
    """A quadrature did not reach the requested tolerance."""


class PropertyViolation(LogScatterError, AssertionError):
    """A mathematical property that must hold by construction was violated."""
