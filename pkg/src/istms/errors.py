"""Exception hierarchy shared by every module."""


class IstmsError(Exception):
    """Base class for all errors raised by this package."""


class DomainError(IstmsError, ValueError):
    """An argument lies outside the domain of a formula."""


class InstabilityError(DomainError):
    """The parametric drive is at or above the instability threshold."""


class NoConvergenceError(IstmsError, RuntimeError):
    """A root finder or steady-state solver failed to converge."""


class DimensionError(IstmsError, ValueError):
    """Operator or state dimensions do not match."""


class NonUniqueSteadyStateError(IstmsError, RuntimeError):
    """The Liouvillian has more than one stationary state."""
