"""Exception hierarchy shared across the package."""


class TransferError(Exception):
    """Base class for all errors raised by this package."""


class SingularityError(TransferError, ValueError):
    """Gravity evaluated at the attracting centre."""


class DegenerateControlError(TransferError, ValueError):
    """Thrust direction requested with a zero velocity costate."""


class GrazingCrossingError(TransferError, ValueError):
    """Shadow boundary crossed tangentially; the jump multiplier diverges."""


class InvalidAngleError(TransferError, ValueError):
    """Costate angle outside the domain where the rotation rate is real."""


class NoRootError(TransferError, ValueError):
    """No sign change of the pitch equation on the admissible interval."""


class UnboundOrbitError(TransferError, ValueError):
    """Osculating orbit is parabolic or hyperbolic."""


class NoFeasibleTransferError(TransferError, RuntimeError):
    """The optimizer budget ended without a single terminating propagation."""


class ConfigError(TransferError, ValueError):
    """Malformed or incomplete scenario configuration."""
