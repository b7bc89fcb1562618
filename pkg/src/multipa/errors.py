"""Exception types shared across the assessment pipeline."""


class MultipaError(Exception):
    """Base class for all package errors."""


class ModelUnavailable(MultipaError):
    """A configured pretrained model cannot be loaded in this environment."""


class EmptyTranscript(MultipaError):
    """The recognizer found no speech content in the audio."""


class AlignmentFailure(MultipaError):
    """The forced aligner could not map the transcript onto the signal."""


class AssessmentUnavailable(MultipaError):
    """The pipeline cannot produce scores for this utterance.

    Raised when any upstream stage (ASR, alignment) fails; the evaluation
    harness converts this into per-dimension fallback scores.
    """


class SchemaViolation(MultipaError):
    """A dataset record does not satisfy the manifest schema."""

    def __init__(self, record_id: str, message: str):
        self.record_id = record_id
        super().__init__(f"{record_id}: {message}")


class DegenerateInput(MultipaError):
    """Metric input is too short or constant, so the metric is undefined."""


class NonFiniteLoss(MultipaError):
    """Training produced a NaN or infinite loss value."""


class CheckpointSchemaMismatch(MultipaError):
    """A checkpoint file was written by an incompatible schema version."""
