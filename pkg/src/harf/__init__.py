"""Phoneme-level pronunciation assessment: normalization, alignment, scoring and evaluation."""

from .alignment import Alignment, EditOp, OpKind, align, lcs_length
from .alphabet import PhonemeAlphabet, default_alphabet, load_alphabet, normalize
from .scoring import DEFAULT_WEIGHTS, ScoreReport, ScoreWeights, score_utterance

__version__ = "0.1.0"

__all__ = [
    "Alignment",
    "EditOp",
    "OpKind",
    "align",
    "lcs_length",
    "PhonemeAlphabet",
    "default_alphabet",
    "load_alphabet",
    "normalize",
    "DEFAULT_WEIGHTS",
    "ScoreReport",
    "ScoreWeights",
    "score_utterance",
]
