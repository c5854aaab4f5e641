"""Blended pronunciation score and its 0-5 clinical mapping.

The utterance score mixes an LCS ratio (order preservation) with an
edit-distance score built from accuracy and completeness. All sub-scores
live on a 0-100 scale; the clinical score is that value divided by 20.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Sequence

from .alignment import Alignment, align, lcs_length
from .errors import ConfigError, EmptyReferenceError, ScoringDomainError
from .segmentation import WordGroup, validate_groups

CLINICAL_MAX = 5.0
_SCALE_TOL = 1e-9


@dataclass(frozen=True)
class ScoreWeights:
    w_lcs: float = 0.6
    w_pron: float = 0.4
    w_acc: float = 0.60
    w_comp: float = 0.40

    def __post_init__(self) -> None:
        for name in ("w_lcs", "w_pron", "w_acc", "w_comp"):
            value = getattr(self, name)
            if not (0.0 <= value <= 1.0):
                raise ConfigError(f"{name}={value} is outside [0, 1]", entry=name)
        if not math.isclose(self.w_lcs + self.w_pron, 1.0, abs_tol=1e-9):
            raise ConfigError("w_lcs + w_pron must equal 1", entry="w_lcs")
        if not math.isclose(self.w_acc + self.w_comp, 1.0, abs_tol=1e-9):
            raise ConfigError("w_acc + w_comp must equal 1", entry="w_acc")

    @classmethod
    def from_primary(cls, w_lcs: float = 0.6, w_acc: float = 0.60) -> "ScoreWeights":
        """Build from the two free weights; the complements follow."""
        return cls(w_lcs=w_lcs, w_pron=1.0 - w_lcs, w_acc=w_acc, w_comp=1.0 - w_acc)

    def to_dict(self) -> dict:
        return {"w_lcs": self.w_lcs, "w_pron": self.w_pron, "w_acc": self.w_acc, "w_comp": self.w_comp}


DEFAULT_WEIGHTS = ScoreWeights()


def lcs_ratio(reference: Sequence[str], predicted: Sequence[str]) -> float:
    """LCS length over reference length, on a 0-100 scale."""
    if len(reference) == 0:
        raise EmptyReferenceError("LCS ratio is undefined for an empty reference")
    return 100.0 * lcs_length(reference, predicted) / len(reference)


def accuracy(n: int, s: int, d: int, i: int) -> float:
    if n < 1:
        raise ScoringDomainError(f"accuracy needs n >= 1, got n={n}")
    if min(s, d, i) < 0:
        raise ScoringDomainError("edit counts must be non-negative")
    return max(0.0, (n - s - d - i) / n) * 100.0


def completeness(n: int, d: int) -> float:
    if n < 1:
        raise ScoringDomainError(f"completeness needs n >= 1, got n={n}")
    if not 0 <= d <= n:
        raise ScoringDomainError(f"deletions must lie in [0, n], got d={d}, n={n}")
    return (n - d) / n * 100.0


def pron_score(accuracy: float, completeness: float, weights: ScoreWeights = DEFAULT_WEIGHTS) -> float:
    return weights.w_acc * accuracy + weights.w_comp * completeness


def harf_score(lcs_ratio: float, pron_score: float, weights: ScoreWeights = DEFAULT_WEIGHTS) -> float:
    return weights.w_lcs * lcs_ratio + weights.w_pron * pron_score


def to_clinical(harf: float) -> float:
    """Map a 0-100 score linearly onto the 0-5 clinical scale."""
    if not (-_SCALE_TOL <= harf <= 100.0 + _SCALE_TOL):
        raise ScoringDomainError(f"score {harf} is outside [0, 100]")
    # weights that only sum to 1 within rounding can push a perfect score an ulp past 100
    return min(max(harf, 0.0), 100.0) * CLINICAL_MAX / 100.0


@dataclass(frozen=True)
class ScoreReport:
    lcs_ratio: float
    accuracy: float
    completeness: float
    pron_score: float
    harf_score: float
    clinical_score: float
    n_ref: int
    s: int
    d: int
    i: int
    lcs: int
    per_word: tuple["WordScore", ...] = field(default=())

    def to_dict(self) -> dict:
        out = {
            "n_ref": self.n_ref,
            "S": self.s,
            "D": self.d,
            "I": self.i,
            "lcs": self.lcs,
            "lcs_ratio": self.lcs_ratio,
            "accuracy": self.accuracy,
            "completeness": self.completeness,
            "pron_score": self.pron_score,
            "harf_score": self.harf_score,
            "clinical_score": self.clinical_score,
        }
        if self.per_word:
            out["per_word"] = [w.to_dict() for w in self.per_word]
        return out


@dataclass(frozen=True)
class WordScore:
    word: str
    ref_phonemes: tuple[str, ...]
    pred_phonemes: tuple[str, ...]
    s: int
    d: int
    i: int
    # None when the word has no reference phonemes left after normalization
    report: ScoreReport | None
    flagged: bool

    def to_dict(self) -> dict:
        return {
            "word": self.word,
            "ref_phonemes": list(self.ref_phonemes),
            "pred_phonemes": list(self.pred_phonemes),
            "S": self.s,
            "D": self.d,
            "I": self.i,
            "flagged": self.flagged,
            "scores": None if self.report is None else self.report.to_dict(),
        }


def score_counts(n: int, s: int, d: int, i: int, lcs: int, weights: ScoreWeights = DEFAULT_WEIGHTS) -> ScoreReport:
    """Compose every sub-score from raw counts (no per-word breakdown)."""
    if n < 1:
        raise EmptyReferenceError("cannot score an empty reference")
    ratio = 100.0 * lcs / n
    acc = accuracy(n, s, d, i)
    comp = completeness(n, d)
    pron = pron_score(acc, comp, weights)
    harf = harf_score(ratio, pron, weights)
    return ScoreReport(
        lcs_ratio=ratio,
        accuracy=acc,
        completeness=comp,
        pron_score=pron,
        harf_score=harf,
        clinical_score=to_clinical(harf),
        n_ref=n,
        s=s,
        d=d,
        i=i,
        lcs=lcs,
    )


def score_word(group: WordGroup, weights: ScoreWeights = DEFAULT_WEIGHTS, flag_below: float | None = None) -> WordScore:
    if group.ops is not None:
        s, d, i = group.counts()
    else:
        sub = align(group.ref_phonemes, group.pred_phonemes)
        s, d, i = sub.s_count, sub.d_count, sub.i_count
    report = None
    if group.ref_phonemes:
        lcs = lcs_length(group.ref_phonemes, group.pred_phonemes)
        report = score_counts(len(group.ref_phonemes), s, d, i, lcs, weights)
    if flag_below is None or report is None:
        flagged = (s + d + i) > 0
    else:
        flagged = report.clinical_score < flag_below
    return WordScore(group.word_text, group.ref_phonemes, group.pred_phonemes, s, d, i, report, flagged)


def score_utterance(
    reference: Sequence[str],
    predicted: Sequence[str],
    word_groups: Sequence[WordGroup] | None = None,
    weights: ScoreWeights = DEFAULT_WEIGHTS,
    *,
    alignment: Alignment | None = None,
    flag_below: float | None = None,
) -> ScoreReport:
    """Score one utterance, with per-word feedback when groups are supplied.

    ``flag_below`` marks words whose clinical score is under the threshold;
    without it a word is flagged when it contains any edit.
    """
    reference, predicted = tuple(reference), tuple(predicted)
    if not reference:
        raise EmptyReferenceError("cannot score an empty reference")
    if alignment is None:
        alignment = align(reference, predicted)
    report = score_counts(
        len(reference),
        alignment.s_count,
        alignment.d_count,
        alignment.i_count,
        lcs_length(reference, predicted),
        weights,
    )
    if word_groups:
        validate_groups(word_groups, reference, predicted)
        per_word = tuple(score_word(g, weights, flag_below) for g in word_groups)
        report = replace(report, per_word=per_word)
    return report
