"""Exception hierarchy shared across the package.

The CLI maps these onto exit codes: configuration problems exit with 2,
data problems with 3, numerical/estimation failures with 4.
"""


class TexclassError(Exception):
    """Base class for all package-specific errors."""


class ConfigError(TexclassError):
    """Invalid configuration: unknown keys, bad values, missing paths."""


class DataError(TexclassError):
    """Invalid or unusable input data (files, labels, feature values)."""


class SplitError(TexclassError):
    """A train/test partition violated its requirements."""


class EstimationError(TexclassError):
    """A numerical estimate could not be produced from the given input."""
