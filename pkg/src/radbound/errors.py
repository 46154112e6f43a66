"""Exception types shared across the package."""


class InvalidInputError(ValueError):
    """Input violates a documented precondition."""


class ParseError(InvalidInputError):
    """A data file could not be parsed."""


class NumericFailureError(ArithmeticError):
    """An iterative routine did not converge."""


class ResourceLimitError(RuntimeError):
    """An exact enumeration would exceed the configured budget."""
