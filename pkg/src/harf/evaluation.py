"""Corpus-level phoneme error rate and real-time factor."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Iterable, Sequence

from .errors import MissingTimingError, ScoringDomainError

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class EvalRecord:
    utterance_id: str
    n_ref: int
    s: int
    d: int
    i: int
    audio_duration_s: float | None = None
    inference_time_s: float | None = None

    def __post_init__(self) -> None:
        if self.n_ref < 0 or min(self.s, self.d, self.i) < 0:
            raise ValueError(f"{self.utterance_id}: counts must be non-negative")
        for name in ("audio_duration_s", "inference_time_s"):
            value = getattr(self, name)
            if value is not None and not value > 0:
                raise ValueError(f"{self.utterance_id}: {name} must be positive, got {value}")

    @property
    def errors(self) -> int:
        return self.s + self.d + self.i

    @property
    def has_timing(self) -> bool:
        return self.audio_duration_s is not None and self.inference_time_s is not None


def per(records: Iterable[EvalRecord]) -> float:
    """Micro-averaged PER in percent: total edits over total reference phonemes."""
    edits = total = 0
    for r in records:
        edits += r.errors
        total += r.n_ref
    if total == 0:
        raise ScoringDomainError("PER is undefined with zero reference phonemes")
    return 100.0 * edits / total


def utterance_per(record: EvalRecord) -> float | None:
    if record.n_ref == 0:
        return None
    return 100.0 * record.errors / record.n_ref


def macro_per(records: Iterable[EvalRecord]) -> float:
    """Unweighted mean of per-utterance PERs (utterances with n_ref=0 skipped)."""
    values = [v for v in map(utterance_per, records) if v is not None]
    if not values:
        raise ScoringDomainError("PER is undefined with zero reference phonemes")
    return sum(values) / len(values)


def rtf(records: Sequence[EvalRecord]) -> float:
    """Total inference time divided by total audio duration."""
    missing = [r.utterance_id for r in records if not r.has_timing]
    if missing or not records:
        raise MissingTimingError(missing)
    return sum(r.inference_time_s for r in records) / sum(r.audio_duration_s for r in records)


def utterance_rtf(record: EvalRecord) -> float | None:
    if not record.has_timing:
        return None
    return record.inference_time_s / record.audio_duration_s


@dataclass(frozen=True)
class EvalSummary:
    per: float
    macro_per: float
    rtf: float | None
    utterance_count: int
    total_ref_phonemes: int
    total_edits: int
    total_audio_s: float | None
    total_inference_s: float | None
    missing_timing: tuple[str, ...] = field(default=())

    def to_dict(self) -> dict:
        return {
            "per": self.per,
            "macro_per": self.macro_per,
            "rtf": self.rtf if self.rtf is not None else "unavailable",
            "utterance_count": self.utterance_count,
            "total_ref_phonemes": self.total_ref_phonemes,
            "total_edits": self.total_edits,
            "total_audio_s": self.total_audio_s,
            "total_inference_s": self.total_inference_s,
            "missing_timing": list(self.missing_timing),
        }


def summarize(records: Sequence[EvalRecord]) -> EvalSummary:
    """PER and, when every record is timed, RTF.

    Missing timings do not fail the summary; RTF is reported as unavailable.
    """
    try:
        corpus_rtf = rtf(records)
        audio = sum(r.audio_duration_s for r in records)
        infer = sum(r.inference_time_s for r in records)
        missing: list[str] = []
    except MissingTimingError as exc:
        log.warning("RTF unavailable: %s", exc)
        corpus_rtf = audio = infer = None
        missing = exc.utterance_ids
    return EvalSummary(
        per=per(records),
        macro_per=macro_per(records),
        rtf=corpus_rtf,
        utterance_count=len(records),
        total_ref_phonemes=sum(r.n_ref for r in records),
        total_edits=sum(r.errors for r in records),
        total_audio_s=audio,
        total_inference_s=infer,
        missing_timing=tuple(missing),
    )


def format_percent(value: float) -> str:
    return f"{value:.2f}%"


def format_rtf(value: float | None) -> str:
    return "unavailable" if value is None else f"{value:.3f}"
