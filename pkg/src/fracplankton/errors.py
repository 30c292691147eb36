"""Exception hierarchy shared by all modules."""


class FracPlanktonError(Exception):
    """Base class for every error raised by this package."""


class DomainError(FracPlanktonError, ValueError):
    """An argument lies outside the domain of the operation."""


class DegenerateOrderError(DomainError):
    """The fractional order is at a degenerate point (e.g. alpha = 1 for a density)."""


class SingularParameterError(DomainError):
    """A half-saturation constant makes a denominator vanish."""

    def __init__(self, message, name=None):
        super().__init__(message)
        self.name = name


class PreconditionError(DomainError):
    """Input data violates a documented precondition (e.g. monotonicity)."""


class NumericalFailure(FracPlanktonError, ArithmeticError):
    """A numerical procedure failed to converge or produced a non-finite value.

    Attributes
    ----------
    partial : float or None
        Best value available at the point of failure.
    bound : float or None
        Error bound or remainder estimate associated with ``partial``.
    step : int or None
        Index of the last good step for time-stepping failures.
    """

    def __init__(self, message, partial=None, bound=None, step=None):
        super().__init__(message)
        self.partial = partial
        self.bound = bound
        self.step = step


class InvariantViolation(FracPlanktonError):
    """A computed object violates an invariant (e.g. negative concentrations)."""


class CertificateInvalid(FracPlanktonError):
    """The hypotheses of a certificate do not hold, so its verdict is void."""
