"""Exception types shared across the package."""


class SpdecError(Exception):
    """Base class for package errors."""


class DomainError(SpdecError, ValueError):
    """An argument lies outside the domain of a function."""


class CapExceeded(SpdecError):
    """An exhaustive computation was requested above its size cap."""


class BudgetExceeded(SpdecError):
    """An exhaustive audit would enumerate more candidates than allowed."""


class Contradiction(SpdecError):
    """Strict decimation produced an empty clause."""


class DegenerateProduct(SpdecError):
    """A logarithm of a zero product was requested."""


class EmptyInput(SpdecError, ValueError):
    """An aggregate was requested over an empty collection."""
