"""Exception types shared across the package."""


class InvalidParameterError(ValueError):
    """A caller supplied a value outside an operation's domain."""


class DomainError(InvalidParameterError):
    """Argument lies outside the mathematical domain of a function."""


class NumericFailureError(ArithmeticError):
    """A numerical routine did not converge or produced a non-finite value.

    ``estimate`` carries the best partial result when one exists.
    """

    def __init__(self, message, estimate=None):
        super().__init__(message)
        self.estimate = estimate
