"""Exception types raised across the package."""


class BellmanError(ValueError):
    """Base class for all package errors."""


class DomainError(BellmanError):
    """An argument lies outside the domain where a quantity is defined."""


class PreconditionError(BellmanError):
    """A documented precondition of an operation does not hold."""


class InvalidWeightError(BellmanError):
    """A weight has non-positive, non-finite, or wrongly sized values."""


class CaseDispatchError(BellmanError):
    """The classification of Phi does not select any constant case."""


class ResourceError(BellmanError):
    """A requested size exceeds the configured caps."""
