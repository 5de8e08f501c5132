"""Exception hierarchy shared across the toolkit.

The CLI maps these onto exit codes: ConfigError -> 1, DataFormatError
(and subclasses) -> 2, NumericError -> 3.
"""


class AlignkitError(Exception):
    """Base class for all toolkit errors."""


class ConfigError(AlignkitError):
    """Invalid configuration value (bad iteration count, tension, ...)."""


class DataFormatError(AlignkitError):
    """Malformed input data; message names the offending line or record."""


class DegeneratePairError(DataFormatError):
    """A sentence pair with an empty source or target side."""


class DimensionMismatchError(DataFormatError):
    """Two alignments over different sentence dimensions were combined."""


class NumericError(AlignkitError):
    """A numeric failure (zero normalizer, non-finite value) during training."""
