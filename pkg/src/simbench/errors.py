"""Exception taxonomy shared across the package.

Validation problems (bad files, bad config) and compute failures are kept
distinct so the service and CLI can map them to different exit codes.
"""

from __future__ import annotations


class SimbenchError(Exception):
    """Base class for all package errors."""


class ValidationFailure(SimbenchError):
    """Bad input: malformed files, inconsistent config, violated preconditions."""


class IngestError(ValidationFailure):
    """A record file failed validation. Carries the offending line number."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class EmptyDatasetError(ValidationFailure):
    pass


class TokenStreamError(ValidationFailure):
    """Tokenization produced no usable tokens for a whole dataset."""


class DimensionMismatchError(ValidationFailure):
    pass


class ZeroVectorError(ValidationFailure):
    """A vector with zero norm cannot be unit-normalized. Carries the row index."""

    def __init__(self, row: int):
        self.row = row
        super().__init__(f"row {row}: zero vector cannot be normalized")


class MissingValueError(ValidationFailure):
    """A lookup keyed by example/dataset id found no value."""


class ConfigError(ValidationFailure):
    """Run configuration is invalid or references missing files."""


class ComputeError(SimbenchError):
    """A pipeline stage failed after validation. Carries the stage name."""

    def __init__(self, stage: str, message: str):
        self.stage = stage
        super().__init__(f"stage '{stage}' failed: {message}")
