"""Exception types shared across the package."""


class SyncapError(Exception):
    """Base class for all package errors."""


class DomainError(SyncapError, ValueError):
    """A parameter lies outside the domain of the operation."""


class ValidationError(SyncapError, ValueError):
    """A user-supplied table or file failed validation."""


class BudgetError(SyncapError, RuntimeError):
    """An exact enumeration would exceed the configured size budget."""


class ConvergenceError(SyncapError, RuntimeError):
    """An iterative routine did not converge within its iteration limit."""


class MissingKeyError(SyncapError, KeyError):
    """A lookup key is not present in a literature table."""

    def __str__(self):
        return str(self.args[0]) if self.args else ""
