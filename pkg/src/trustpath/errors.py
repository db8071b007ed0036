"""Exception hierarchy shared across the package.

The CLI maps these onto distinct exit codes, so raising the right class
matters: configuration problems must be distinguishable from runtime
stage failures and from planner non-convergence.
"""

from __future__ import annotations


class TrustPathError(Exception):
    """Base class for all errors raised by this package."""


class ConfigError(TrustPathError):
    """Invalid configuration, scenario file, or parameter value."""


class IngestError(TrustPathError):
    """Malformed or inconsistent collaboration record.

    Carries the offending record index (or file line number) so callers
    can report exactly which input line is broken.
    """

    def __init__(self, message: str, index: int | None = None):
        self.index = index
        if index is not None:
            message = f"record {index}: {message}"
        super().__init__(message)


class ModelError(TrustPathError):
    """Inconsistent model state: bad dimensions, unknown device, etc."""


class TrainingDivergedError(TrustPathError):
    """Training produced a non-finite loss."""


class PlanningError(TrustPathError):
    """Invalid planning input (unknown owner, malformed path, ...)."""


class OracleBoundExceededError(TrustPathError):
    """Instance too large for exhaustive path enumeration."""


class StageError(TrustPathError):
    """Pipeline stage failure, tagged with the stage name."""

    def __init__(self, stage: str, cause: Exception):
        self.stage = stage
        self.cause = cause
        super().__init__(f"stage '{stage}' failed: {cause}")
