"""Exception hierarchy shared by all modules."""


class StochpertError(Exception):
    """Base class for all library errors."""


class DomainError(StochpertError):
    """Input violates a documented precondition (bad parameter, wrong shape,
    missing spectral gap, nonzero total charge, ...)."""


class NumericalError(StochpertError):
    """A computation failed to reach its guaranteed accuracy (non-convergence,
    residual above contract, iteration cap)."""


class ConfigError(StochpertError):
    """A configuration document is malformed; the message carries the
    offending field path."""
