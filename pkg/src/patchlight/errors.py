"""Exception hierarchy shared across the package.

Each class carries the process exit code the CLI maps it to, so command
handlers can stay free of error-translation tables.
"""


class PatchlightError(Exception):
    """Base class for all errors raised by this package."""

    exit_code = 1


class UsageError(PatchlightError):
    """Caller passed arguments that can never be valid."""

    exit_code = 2


class ParameterError(UsageError):
    """A value violates an operation's preconditions."""


class BoundsError(ParameterError):
    """A patch region does not fit inside its parent image."""


class GeometryError(ParameterError):
    """A search or crop geometry admits no valid placement."""


class DataError(PatchlightError):
    """Input data (image files, datasets) is missing or undecodable."""

    exit_code = 3


class EmptyDatasetError(DataError):
    """A dataset scan found no usable pairs."""


class ConfigError(PatchlightError):
    """Configuration is inconsistent with itself or with a checkpoint."""

    exit_code = 4


class CheckpointError(ConfigError):
    """A checkpoint is corrupt or does not match the active config."""


class NumericError(PatchlightError):
    """A computed quantity is not finite."""

    exit_code = 5
