"""Exception types shared across the package."""


class FinmemError(Exception):
    """Base class for domain errors raised by this package."""


class InvalidArgument(FinmemError, ValueError):
    pass


class NumericalFailure(FinmemError, ArithmeticError):
    """A linear solve broke down or returned a residual beyond tolerance."""


class ResourceLimit(FinmemError):
    """Requested size exceeds a configured guard (state count, search size)."""


class UnsupportedStructure(FinmemError):
    """The machine does not have the structure an analysis requires."""
