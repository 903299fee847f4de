"""Exception taxonomy for the pipeline.

Everything user-facing derives from PipelineError so the CLI can map any
domain failure to a single exit code. Contract violations that indicate a
caller bug (bad shapes, out-of-order pushes) subclass ValueError as well.
"""


class PipelineError(Exception):
    """Base class for all domain errors raised by this package."""


class ShapeMismatchError(PipelineError, ValueError):
    """An array payload does not have the contracted shape."""


class EmptyStreamError(PipelineError, ValueError):
    """An operation requires a non-empty stream."""


# --- capture ---------------------------------------------------------------

class DuplicateModalityError(PipelineError, ValueError):
    """Two channels were configured for the same modality."""


class MissingMandatoryModalityError(PipelineError, ValueError):
    """A recorder was opened without a mandatory modality channel."""


class OutOfOrderTimestampError(PipelineError, ValueError):
    """A pushed frame's timestamp is not after the previous frame's."""


class SessionNotRecordingError(PipelineError, RuntimeError):
    """An operation required the recorder to be in the recording state."""


# --- sync ------------------------------------------------------------------

class NonIntegerRateRatioError(PipelineError, ValueError):
    """Measured stream rate is not an integer multiple of the anchor rate."""


class InsufficientOverlapError(PipelineError, ValueError):
    """Mandatory streams share too little common time to align."""


# --- preprocessing ---------------------------------------------------------

class TooFewFramesError(PipelineError, ValueError):
    """Not enough frames to estimate a baseline."""


class TooFewSamplesError(PipelineError, ValueError):
    """A calibration axis has too few displacement samples."""


class DegenerateMatrixError(PipelineError, ValueError):
    """Matrix is rank-deficient beyond tolerance; no nearest rotation."""


class DegenerateMotionError(PipelineError, ValueError):
    """Calibration axis directions are too close to collinear."""


# --- pretraining -----------------------------------------------------------

class ZeroVectorError(PipelineError, ValueError):
    """Cosine similarity or normalization is undefined for a zero vector."""


class BatchTooSmallError(PipelineError, ValueError):
    """Contrastive training needs at least two items per batch."""


class NonFiniteLossError(PipelineError, RuntimeError):
    """Training produced a NaN or infinite loss."""


class MissingAnchorFeaturesError(PipelineError, KeyError):
    """No anchor feature vector is available for a sample."""


# --- file formats ----------------------------------------------------------

class BadMagicError(PipelineError, ValueError):
    """File does not start with the expected magic bytes."""


class VersionMismatchError(PipelineError, ValueError):
    """File format version is not supported."""


class TruncatedRecordError(PipelineError, ValueError):
    """File ends in the middle of a record."""


class NonMonotoneTimestampsError(PipelineError, ValueError):
    """Record timestamps in a stream file are not strictly increasing."""


class CountMismatchError(PipelineError, ValueError):
    """Manifest sample count disagrees with the records present."""


class ConfigError(PipelineError, ValueError):
    """Pipeline configuration file is invalid or has unknown keys."""


class NoDemosError(PipelineError, ValueError):
    """Statistics require at least one demo file."""
