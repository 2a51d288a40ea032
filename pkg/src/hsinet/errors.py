"""Exception taxonomy shared by every module.

The CLI maps these onto exit-code families: configuration (2), data (3),
numeric (4). Binary-format problems get their own subclasses so callers can
distinguish a wrong file from a damaged one.
"""


class HsiNetError(Exception):
    """Base class for all errors raised by this package."""


class ShapeError(HsiNetError):
    """Array dimensions incompatible with the requested operation."""


class ParameterError(HsiNetError):
    """A scalar argument is outside its legal range."""


class ConfigError(HsiNetError):
    """Model or experiment configuration violates its invariants."""


class DataError(HsiNetError):
    """Dataset-level problem: empty set, mismatched grids, missing files."""


class LabelError(HsiNetError):
    """Class label outside [0, C)."""


class NumericError(HsiNetError):
    """Non-finite values where finite ones are required."""


class StateError(HsiNetError):
    """Operation requires state that has not been established."""


class MetricError(HsiNetError):
    """Metric undefined for this confusion matrix."""


class FormatError(HsiNetError):
    """Base for binary file-format problems (HSC, HSG, checkpoints)."""


class MagicError(FormatError):
    """File does not start with the expected magic bytes."""


class VersionError(FormatError):
    """File magic is right but the format version is unsupported."""


class TruncatedError(FormatError):
    """File ends before the payload its header promises."""


class DimensionError(FormatError):
    """Header dimensions are zero, absurd, or inconsistent with the payload."""
