"""Exception types shared across the package."""


class GLShrinkError(Exception):
    """Base class for package errors."""


class DomainError(GLShrinkError, ValueError):
    """An argument lies outside the mathematical domain of an operation."""


class UsageError(GLShrinkError, ValueError):
    """A precondition on how an operation is called was violated."""


class UnsupportedKernelError(GLShrinkError, TypeError):
    """The requested capability is not available for this prior kernel."""


class NumericError(GLShrinkError, ArithmeticError):
    """Quadrature failed to converge.

    The partial numerator and denominator integrals are kept so callers can
    inspect how far the computation got.
    """

    def __init__(self, message, numerator=None, denominator=None):
        super().__init__(message)
        self.numerator = numerator
        self.denominator = denominator
