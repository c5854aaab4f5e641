"""Word-level grouping of reference and predicted phonemes.

The default segmenter projects the utterance alignment onto the reference
word spans. An external service may be plugged in instead; its answer is
validated and the caller can fall back to projection.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Any, Sequence

from ._http import post_json
from .alignment import DELETE, INSERT, SUBSTITUTE, Alignment, EditOp
from .errors import PartitionError, SegmentationValidationError

log = logging.getLogger(__name__)

# (word_text, (start, stop)) with a half-open span into the reference
WordSpan = tuple[str, tuple[int, int]]


@dataclass(frozen=True)
class WordGroup:
    word_text: str
    ref_phonemes: tuple[str, ...]
    pred_phonemes: tuple[str, ...]
    # the utterance-level ops that fell into this word; None for external groups
    ops: tuple[EditOp, ...] | None = None

    def counts(self) -> tuple[int, int, int]:
        """(S, D, I) tallied from the projected ops."""
        if self.ops is None:
            raise ValueError(f"word {self.word_text!r} carries no projected ops")
        s = d = i = 0
        for op in self.ops:
            if op.kind is SUBSTITUTE:
                s += 1
            elif op.kind is DELETE:
                d += 1
            elif op.kind is INSERT:
                i += 1
        return s, d, i


@dataclass(frozen=True)
class SegmenterHook:
    address: str
    timeout: float = 10.0
    retries: int = 1

    def __post_init__(self) -> None:
        if not self.timeout > 0:
            raise ValueError("segmenter timeout must be positive")
        if self.retries < 0:
            raise ValueError("retry budget must be >= 0")


def word_spans(words: Sequence[tuple[str, Sequence[str]]]) -> list[WordSpan]:
    """Turn (word, phonemes) pairs into consecutive reference spans."""
    spans = []
    start = 0
    for text, phonemes in words:
        stop = start + len(phonemes)
        spans.append((text, (start, stop)))
        start = stop
    return spans


def _check_tiling(spans: Sequence[tuple[int, int]], length: int, what: str, error=PartitionError) -> None:
    if not spans:
        if length:
            raise error(f"no {what} spans given for a sequence of length {length}")
        return
    expected = 0
    for k, (start, stop) in enumerate(spans):
        if start != expected or stop < start:
            raise error(f"{what} span #{k} ({start}, {stop}) does not continue at {expected}")
        expected = stop
    if expected != length:
        raise error(f"{what} spans end at {expected} but the sequence has length {length}")


def segment_by_projection(
    word_boundaries: Sequence[WordSpan],
    full_alignment: Alignment,
    predicted: Sequence[str],
) -> list[WordGroup]:
    """Split an utterance alignment into per-word groups.

    Matches, substitutions and deletions belong to the word of their reference
    position. An insertion joins the word of the closest earlier op that has a
    reference position; insertions before any such op join the first word.
    """
    predicted = tuple(predicted)
    n_ref = full_alignment.ref_length
    _check_tiling([span for _, span in word_boundaries], n_ref, "reference")
    if len(predicted) != full_alignment.pred_length:
        raise PartitionError(
            f"alignment covers {full_alignment.pred_length} predicted phonemes, got {len(predicted)}"
        )
    if not word_boundaries:
        if predicted:
            raise PartitionError("predicted phonemes but no words to attach them to")
        return []

    word_of = [0] * n_ref
    for w, (_, (start, stop)) in enumerate(word_boundaries):
        for k in range(start, stop):
            word_of[k] = w

    buckets: list[list[EditOp]] = [[] for _ in word_boundaries]
    current = 0
    for op in full_alignment.ops:
        if op.ref_index is not None:
            current = word_of[op.ref_index]
        buckets[current].append(op)

    groups = []
    for (text, _), ops in zip(word_boundaries, buckets):
        groups.append(
            WordGroup(
                word_text=text,
                ref_phonemes=tuple(op.ref for op in ops if op.ref_index is not None),
                pred_phonemes=tuple(predicted[op.pred_index] for op in ops if op.pred_index is not None),
                ops=tuple(ops),
            )
        )
    return groups


def validate_groups(groups: Sequence[WordGroup], reference: Sequence[str], predicted: Sequence[str]) -> None:
    """Raise unless the groups tile both sequences in order."""
    ref = tuple(p for g in groups for p in g.ref_phonemes)
    pred = tuple(p for g in groups for p in g.pred_phonemes)
    if ref != tuple(reference):
        raise SegmentationValidationError("word groups do not reproduce the reference sequence")
    if pred != tuple(predicted):
        raise SegmentationValidationError("word groups do not reproduce the predicted sequence")


def _span(value: Any, what: str) -> tuple[int, int]:
    if (
        not isinstance(value, (list, tuple))
        or len(value) != 2
        or not all(isinstance(v, int) and not isinstance(v, bool) for v in value)
    ):
        raise SegmentationValidationError(f"{what} must be a [start, stop] pair of integers, got {value!r}")
    return value[0], value[1]


def parse_segmenter_response(
    payload: Any, reference: Sequence[str], predicted: Sequence[str]
) -> list[WordGroup]:
    """Decode and validate ``[{word_text, ref_span, pred_span}, ...]``.

    A top-level ``{"groups": [...]}`` wrapper is also accepted.
    """
    if isinstance(payload, dict) and "groups" in payload:
        payload = payload["groups"]
    if not isinstance(payload, list):
        raise SegmentationValidationError("segmenter reply must be a list of groups")
    reference, predicted = tuple(reference), tuple(predicted)
    ref_spans, pred_spans, texts = [], [], []
    for k, item in enumerate(payload):
        if not isinstance(item, dict) or not isinstance(item.get("word_text"), str):
            raise SegmentationValidationError(f"group #{k} lacks a string 'word_text'")
        texts.append(item["word_text"])
        ref_spans.append(_span(item.get("ref_span"), f"group #{k} ref_span"))
        pred_spans.append(_span(item.get("pred_span"), f"group #{k} pred_span"))
    _check_tiling(ref_spans, len(reference), "reference", SegmentationValidationError)
    _check_tiling(pred_spans, len(predicted), "predicted", SegmentationValidationError)
    groups = [
        WordGroup(text, reference[rs:re_], predicted[ps:pe])
        for text, (rs, re_), (ps, pe) in zip(texts, ref_spans, pred_spans)
    ]
    validate_groups(groups, reference, predicted)
    return groups


def segment_external(
    hook: SegmenterHook,
    text: str,
    reference: Sequence[str],
    predicted: Sequence[str],
) -> list[WordGroup]:
    """Ask an external segmentation service for word groups.

    Raises TransportError once the retry budget is spent and
    SegmentationValidationError when the reply does not tile the sequences.
    """
    payload = {"text": text, "reference": list(reference), "predicted": list(predicted)}
    reply = post_json(hook.address, payload, timeout=hook.timeout, retries=hook.retries)
    return parse_segmenter_response(reply, reference, predicted)


def segment(
    word_boundaries: Sequence[WordSpan],
    full_alignment: Alignment,
    predicted: Sequence[str],
    *,
    hook: SegmenterHook | None = None,
    text: str = "",
) -> list[WordGroup]:
    """Use the external hook when configured, projection otherwise or on a bad reply."""
    if hook is not None:
        reference = full_alignment.reference()
        try:
            return segment_external(hook, text, reference, predicted)
        except SegmentationValidationError as exc:
            log.warning("external segmenter reply rejected (%s); using alignment projection", exc)
    return segment_by_projection(word_boundaries, full_alignment, predicted)
