"""Exception taxonomy shared by every pipeline stage."""


class MsvadError(Exception):
    """Base class for all pipeline errors."""


# audio_io
class UnsupportedFormat(MsvadError):
    """File is not a PCM WAV (16-bit int or 32-bit float)."""


class CorruptFile(MsvadError):
    """WAV header or data chunk is truncated or inconsistent."""


class InvalidGrid(MsvadError):
    """Frame grid parameters violate hop/frame constraints or do not match the clip."""


# vad_bank
class WrongFeatureKind(MsvadError):
    """A VAD was handed a FeatureMatrix of the wrong kind."""


class FormatError(MsvadError):
    """A wire-format file has a bad header or malformed payload."""


class GridMismatch(MsvadError):
    """Stream grids are incompatible (non-integer hop ratio or differing bank grids)."""


# fusion
class DomainError(MsvadError):
    """Probability argument outside [0, 1]."""


class WindowCountMismatch(MsvadError):
    """Entropy profiles being normalized together have differing window counts."""


class EmptyBank(MsvadError):
    """Fusion needs at least two streams."""


class EmptyInput(MsvadError):
    """Operation requires at least one element."""


# stream manager
class OutOfOrderSegment(MsvadError):
    """Speech segments must arrive in source-time order."""


class NotTriggered(MsvadError):
    """carryover() is only legal immediately after a trigger."""


# embeddings
class SpanOutOfRange(MsvadError):
    """Requested time span lies outside the clip."""


class DimensionMismatch(MsvadError):
    """Embedding rows have unequal dimensionality."""


# clustering
class NumericalFailure(MsvadError):
    """Non-finite value surfaced during variational inference."""


# metrics
class NotSingleSpeakerSet(MsvadError):
    """DFR is only defined over recordings whose true speaker count is 1."""


# corpus
class IoError(MsvadError):
    """Corpus files could not be written or read."""


class EmptyWavPool(MsvadError):
    """WAV-pool voice mode was given a directory with no usable WAV files."""


# config
class ConfigError(MsvadError):
    """Pipeline config file has unknown keys, bad values, or a wrong schema version."""


class WireFormatWarning(UserWarning):
    """Non-fatal oddity while parsing a wire-format file (e.g. clamped values)."""
