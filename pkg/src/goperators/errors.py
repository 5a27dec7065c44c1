"""Exception types raised across the package."""


class GOperatorError(Exception):
    """Base class for all package errors."""


class DomainError(GOperatorError, ValueError):
    """An input lies outside the domain of an operation (e.g. a zero covector)."""


class UsageError(GOperatorError, ValueError):
    """An operation was called with incompatible or meaningless arguments."""


class SingularityError(GOperatorError):
    """A Hamiltonian trajectory approached the zero section."""


class CausticError(GOperatorError):
    """Newton inversion of the flow failed; the map is not near-identity enough."""


class ConditioningError(GOperatorError):
    """A matrix is too close to singular for the requested operation."""


class InversionError(GOperatorError):
    """A crossed-product element could not be inverted within the support cap."""


class TruncationError(GOperatorError):
    """A convolution product left the quadrature window of a line group."""
