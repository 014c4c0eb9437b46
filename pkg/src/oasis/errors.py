"""Exception hierarchy shared across the toolkit.

Every error raised by this package derives from :class:`OasisError`, so
callers can catch one base class at CLI / service boundaries.  Names map
one-to-one onto the failure modes documented on each operation.
"""


class OasisError(Exception):
    """Base class for all package errors."""


# --- ingestion / gridding ---------------------------------------------------

class MalformedInput(OasisError):
    """Input table has no usable header or no mappable columns."""


class EmptyInput(OasisError):
    """Zero valid rows survived parsing."""


class DegenerateGrid(OasisError):
    """Grid with a zero-sized axis (U, V or T_data)."""


class TooFewTrajectories(OasisError):
    """Fewer trajectories than a split requires."""


class InvalidConfig(OasisError):
    """Synthetic-data or experiment configuration is inconsistent."""


# --- normalization ----------------------------------------------------------

class EmptySequence(OasisError):
    """Statistics requested over zero observed values."""


class ShapeMismatch(OasisError):
    """Array arguments do not align."""


class ZeroGamma(OasisError):
    """Denormalization with a zero scale parameter."""


class UnfittedNormalizer(OasisError):
    """Normalization state used before statistics were computed."""


# --- attention --------------------------------------------------------------

class OddDimension(OasisError):
    """Positional encoding requires an even embedding width."""


class NonFiniteLogits(OasisError):
    """Attention logits contain NaN or infinity."""


# --- diffusion schedule -----------------------------------------------------

class InvalidRange(OasisError):
    """Schedule parameters outside their admissible range."""


class StepOutOfRange(OasisError):
    """Diffusion step index outside [1, T_diff]."""


# --- training ---------------------------------------------------------------

class EmptyTrainingSet(OasisError):
    """Training requested with no samples."""


class DivergedLoss(OasisError):
    """A loss became non-finite during training."""


class NonFiniteInput(OasisError):
    """Model input contains NaN or infinity."""


# --- tide subsystem ---------------------------------------------------------

class NetworkError(OasisError):
    """Tide retrieval failed at the transport level (retryable)."""


class ParseError(OasisError):
    """Tide response body could not be parsed."""


class EmptyResponse(OasisError):
    """Tide response parsed but contained no events."""


class TooFewEvents(OasisError):
    """Not enough tide events for the requested fit."""


class DegenerateFit(OasisError):
    """Rank-deficient design matrix (e.g. all events at one time)."""


class UnfittedModel(OasisError):
    """Prediction from a model that has not been fitted."""


# --- baselines --------------------------------------------------------------

class TooFewPoints(OasisError):
    """Not enough points to fit a spatial model."""


class SingularSystem(OasisError):
    """Kriging system unsolvable even after nugget jitter."""


class Unfitted(OasisError):
    """Predict called before fit."""


class RankDeficientLocalFit(OasisError):
    """A locally weighted regression could not be solved at full rank."""


# --- metrics / evaluation ---------------------------------------------------

class LengthMismatch(OasisError):
    """Paired metric inputs of different lengths."""


# --- serving ----------------------------------------------------------------

class CorruptCheckpoint(OasisError):
    """Checkpoint file is truncated or fails validation."""


class VersionMismatch(OasisError):
    """Checkpoint format version is not supported."""


class OutOfRegion(OasisError):
    """Request coordinates outside the model's declared region."""


class TideUnavailable(OasisError):
    """No tide override and tide fetch/fit failed."""


class MalformedHeader(OasisError):
    """Batch imputation input lacks the required header columns."""
