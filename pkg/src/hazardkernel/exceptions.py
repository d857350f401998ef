"""Exception hierarchy shared by all modules."""


class HazardKernelError(Exception):
    """Base class for errors raised by this package."""


class DomainError(HazardKernelError, ValueError):
    """An argument lies outside the domain of the operation."""


class EmptyGridError(DomainError):
    """A bandwidth grid construction produced no admissible bandwidth."""


class DataError(HazardKernelError, ValueError):
    """Input data could not be parsed or failed validation."""

    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class NumericalError(HazardKernelError, ArithmeticError):
    """A numerical routine failed to reach its tolerance."""
