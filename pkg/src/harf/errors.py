"""Exception hierarchy shared across the package."""

from __future__ import annotations


class HarfError(Exception):
    """Base class for every error raised by this package."""


class ConfigError(HarfError):
    """Malformed or inconsistent configuration (alphabet file, weights, run flags)."""

    def __init__(self, message: str, *, line: int | None = None, entry: str | None = None):
        self.line = line
        self.entry = entry
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class NormalizationError(HarfError):
    """A raw token could not be brought into the phoneme inventory."""

    def __init__(self, message: str, *, token: str, index: int):
        self.token = token
        self.index = index
        super().__init__(f"{message}: {token!r} at index {index}")


class UnmappableTokenError(NormalizationError):
    pass


class OrphanGeminateError(NormalizationError):
    pass


class ScoringDomainError(HarfError, ValueError):
    """Scoring formula called outside its domain (e.g. empty reference)."""


class EmptyReferenceError(ScoringDomainError):
    pass


class PartitionError(HarfError, ValueError):
    """Word spans or groups do not tile the phoneme sequences."""


class SegmentationValidationError(PartitionError):
    """An external segmenter returned groups that fail validation."""


class TransportError(HarfError):
    """Network call failed after exhausting its retry budget."""

    def __init__(self, message: str, *, attempts: int):
        self.attempts = attempts
        super().__init__(f"{message} (after {attempts} attempt(s))")


class BackendResponseError(HarfError):
    """A prediction service answered with something that is not a token array."""


class DatasetError(HarfError):
    """Utterance file problems: bad JSON, missing fields, duplicate ids."""

    def __init__(self, message: str, *, line: int | None = None, field: str | None = None):
        self.line = line
        self.field = field
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class DuplicateIdError(DatasetError):
    pass


class SchemaError(DatasetError):
    pass


class MissingTimingError(HarfError, ValueError):
    def __init__(self, utterance_ids: list[str]):
        self.utterance_ids = list(utterance_ids)
        super().__init__("missing audio_duration_s/inference_time_s for: " + ", ".join(self.utterance_ids))


class DegenerateError(HarfError, ValueError):
    """A statistic is undefined for the input (constant vector, zero denominator)."""


class SubjectMismatchError(HarfError):
    def __init__(self, system: str, missing: list[str], extra: list[str] | None = None):
        self.system = system
        self.missing = list(missing)
        self.extra = list(extra or [])
        parts = []
        if self.missing:
            parts.append("missing subjects: " + ", ".join(self.missing))
        if self.extra:
            parts.append("unknown subjects: " + ", ".join(self.extra))
        super().__init__(f"{system}: " + "; ".join(parts))
