"""Exception types shared across the package."""


class EvocastError(Exception):
    """Base class for package errors."""


class FetchRetryError(EvocastError):
    """Network fetch failed after bounded retries.

    Carries the number of attempts made so callers can decide whether to
    retry later.
    """

    def __init__(self, message, attempts):
        super().__init__(f"{message} (after {attempts} attempts)")
        self.attempts = attempts


class PayloadError(EvocastError):
    """API payload was malformed or incomplete; names the offending field."""

    def __init__(self, field, detail=""):
        msg = f"malformed payload: field {field!r}"
        if detail:
            msg += f" ({detail})"
        super().__init__(msg)
        self.field = field


class CacheIOError(EvocastError):
    """Cache file could not be written or read."""


class ArtifactError(EvocastError):
    """Model or dataset artifact failed to load (version/checksum/shape)."""


class TrainingDivergedError(EvocastError):
    """Validation loss became non-finite during training."""
