"""Exception types raised by the package."""


class EwensSpectraError(Exception):
    """Base class for all package errors."""


class TruncationOverflow(EwensSpectraError):
    """Stick breaking needed more sticks than the configured hard cap."""


class InvalidWindow(EwensSpectraError, ValueError):
    """Counting window is not admissible (e.g. left endpoint <= 0 for tau_infinity)."""


class NotCoprime(EwensSpectraError, ValueError):
    pass


class DivergentAtZero(EwensSpectraError, ValueError):
    """g(x)/x is not integrable at the origin."""


class ConfigInvalid(EwensSpectraError, ValueError):
    pass


class DegenerateSeries(EwensSpectraError, ValueError):
    """Sample has zero variance, so it cannot be standardized."""


class InsufficientGrid(EwensSpectraError, ValueError):
    pass
