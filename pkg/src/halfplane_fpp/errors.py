"""Exception types shared across the package."""


class ParameterError(ValueError):
    """Invalid or inconsistent input parameters."""


class DomainError(ParameterError):
    """A site or set of sites lies outside the domain it is used with."""


class BoxTooSmallError(ParameterError):
    """The simulation box cannot contain what a computation needs."""
