"""Exception types raised across the package."""


class SeizureBenchError(Exception):
    """Base class for every error raised by seizurebench."""


class DataFormatError(SeizureBenchError, ValueError):
    """Input data is malformed (bad shape, bad cell, bad label)."""


class TrainingError(SeizureBenchError, RuntimeError):
    """Model fitting diverged or produced non-finite values."""


class PipelineError(SeizureBenchError):
    """An error raised inside a named stage of the experiment pipeline."""

    def __init__(self, stage: str, cause: BaseException):
        self.stage = stage
        self.cause = cause
        super().__init__(f"[{stage}] {cause}")
