"""Exception hierarchy shared across the package.

The CLI maps these onto its exit-code contract: configuration problems
exit with 2, numerical failures with 3, artifact/threshold mismatches
with 4.
"""


class MosdetError(Exception):
    """Base class for all package errors."""


class ConfigError(MosdetError):
    """A configuration file or parameter set failed validation."""


class NumericalError(MosdetError):
    """A numerical operation could not be completed."""


class NotPositiveDefinite(NumericalError):
    """A matrix required to be Hermitian positive definite is not.

    Typically signals rank deficiency, e.g. fewer training snapshots
    than array channels.
    """


class DimensionMismatch(MosdetError, ValueError):
    """Operand shapes are incompatible."""


class InsufficientTrials(NumericalError):
    """Too few Monte Carlo trials for the requested false-alarm rate."""


class ConfigMismatch(MosdetError):
    """A result or its file does not match the configuration it is used
    with (e.g. thresholds calibrated under a different config hash)."""
