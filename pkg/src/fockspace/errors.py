"""Exception hierarchy shared by all fockspace modules."""


class FockspaceError(Exception):
    """Base class for all errors raised by this package."""


class CutoffError(FockspaceError):
    """A truncated basis is too small for the requested state or operation."""


class DimensionMismatchError(FockspaceError):
    """Operands live in Fock spaces of different dimension."""


class DomainError(FockspaceError, ValueError):
    """A parameter lies outside its mathematical domain."""


class TruncationError(FockspaceError):
    """Applying a truncated unitary lost more norm than the strict-mode budget."""


class SingularPError(FockspaceError):
    """The requested quasi-probability does not exist as a bounded function."""


class GridError(FockspaceError):
    """A phase-space or quadrature grid is unsuitable (too small, mismatched)."""


class UndefinedStatisticError(FockspaceError):
    """A photon-counting statistic is undefined for this distribution."""


class DataContractError(FockspaceError):
    """A data file or dataset violates the interchange contract."""


class ConfigError(FockspaceError):
    """A scenario configuration is invalid."""
