"""One-utterance assessment: normalize, align, segment, score."""

from __future__ import annotations

from dataclasses import dataclass

from .alignment import Alignment, align
from .alphabet import PhonemeAlphabet, PhonemeSequence, UnknownPolicy, normalize, normalize_words
from .evaluation import EvalRecord
from .ingest import Utterance
from .scoring import DEFAULT_WEIGHTS, ScoreReport, ScoreWeights, score_utterance
from .segmentation import SegmenterHook, WordGroup, segment, word_spans


@dataclass(frozen=True)
class Assessment:
    utterance: Utterance
    reference: PhonemeSequence
    predicted: PhonemeSequence
    alignment: Alignment
    groups: tuple[WordGroup, ...]
    report: ScoreReport

    def to_dict(self) -> dict:
        return {
            "id": self.utterance.id,
            "text": self.utterance.text,
            "reference": list(self.reference),
            "predicted": list(self.predicted),
            "alignment": self.alignment.to_dict(),
            "scores": self.report.to_dict(),
        }


def prepare(
    utt: Utterance,
    alphabet: PhonemeAlphabet,
    on_unknown: UnknownPolicy | str = UnknownPolicy.ERROR,
) -> tuple[list[tuple[str, PhonemeSequence]], PhonemeSequence, PhonemeSequence]:
    """Normalize reference words and prediction; returns (words, reference, predicted)."""
    if utt.pred_tokens is None:
        raise ValueError(f"{utt.id}: no predicted phonemes")
    words = normalize_words(utt.ref_words, alphabet, on_unknown)
    reference = tuple(p for _, phonemes in words for p in phonemes)
    predicted = normalize(utt.pred_tokens, alphabet, on_unknown)
    return words, reference, predicted


def assess(
    utt: Utterance,
    alphabet: PhonemeAlphabet,
    weights: ScoreWeights = DEFAULT_WEIGHTS,
    *,
    on_unknown: UnknownPolicy | str = UnknownPolicy.ERROR,
    flag_below: float | None = None,
    hook: SegmenterHook | None = None,
) -> Assessment:
    words, reference, predicted = prepare(utt, alphabet, on_unknown)
    alignment = align(reference, predicted)
    groups = segment(word_spans(words), alignment, predicted, hook=hook, text=utt.text)
    report = score_utterance(reference, predicted, groups, weights, alignment=alignment, flag_below=flag_below)
    return Assessment(utt, reference, predicted, alignment, tuple(groups), report)


def eval_record(
    utt: Utterance,
    alphabet: PhonemeAlphabet,
    on_unknown: UnknownPolicy | str = UnknownPolicy.ERROR,
) -> EvalRecord:
    _, reference, predicted = prepare(utt, alphabet, on_unknown)
    a = align(reference, predicted)
    return EvalRecord(
        utterance_id=utt.id,
        n_ref=len(reference),
        s=a.s_count,
        d=a.d_count,
        i=a.i_count,
        audio_duration_s=utt.audio_duration_s,
        inference_time_s=utt.inference_time_s,
    )
