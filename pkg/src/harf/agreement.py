"""Pairwise agreement between raters and systems on the 0-5 clinical scale.

Each pair gets PCC, SCC (midranks), ICC(2,1), MAE, RMSE, and exact / within-one
percentages. Correlations that are undefined for a pair (a constant vector)
come back as ``None`` instead of aborting the whole table.
"""

from __future__ import annotations

import csv
import enum
import itertools
import math
import os
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

import numpy as np
from scipy.stats import rankdata

from .errors import DatasetError, DegenerateError, SubjectMismatchError

SCALE_MIN, SCALE_MAX = 0.0, 5.0
SYSTEM_PREFIX = "sys:"
MEAN_RATER = "mean"
INTER_RATER_GROUP = "inter-rater"


class Rounding(str, enum.Enum):
    INTEGER = "integer"
    NONE = "none"


def _pair(x: Sequence[float], y: Sequence[float], min_len: int = 1) -> tuple[np.ndarray, np.ndarray]:
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.ndim != 1 or x.shape != y.shape:
        raise ValueError(f"score vectors must be 1-d and equally long, got {x.shape} and {y.shape}")
    if len(x) < min_len:
        raise ValueError(f"need at least {min_len} paired scores, got {len(x)}")
    return x, y


def pearson(x: Sequence[float], y: Sequence[float]) -> float:
    x, y = _pair(x, y, 2)
    dx = x - x.mean()
    dy = y - y.mean()
    sxx = float(dx @ dx)
    syy = float(dy @ dy)
    if sxx == 0.0 or syy == 0.0:
        raise DegenerateError("correlation is undefined for a constant vector")
    r = float(dx @ dy) / math.sqrt(sxx * syy)
    return min(1.0, max(-1.0, r))


def spearman(x: Sequence[float], y: Sequence[float]) -> float:
    """Pearson correlation of average ranks (ties share their mean rank)."""
    x, y = _pair(x, y, 2)
    return pearson(rankdata(x, method="average"), rankdata(y, method="average"))


@dataclass(frozen=True)
class RaterMatrix:
    subject_ids: tuple[str, ...]
    rater_ids: tuple[str, ...]
    scores: np.ndarray  # subjects x raters

    def __post_init__(self) -> None:
        scores = np.array(self.scores, dtype=float)
        scores.setflags(write=False)
        object.__setattr__(self, "scores", scores)
        object.__setattr__(self, "subject_ids", tuple(self.subject_ids))
        object.__setattr__(self, "rater_ids", tuple(self.rater_ids))
        if scores.shape != (len(self.subject_ids), len(self.rater_ids)):
            raise ValueError(
                f"score grid is {scores.shape}, expected {(len(self.subject_ids), len(self.rater_ids))}"
            )
        if np.isnan(scores).any():
            raise ValueError("score grid has missing cells")
        if scores.size and (scores.min() < SCALE_MIN or scores.max() > SCALE_MAX):
            raise ValueError(f"scores must lie in [{SCALE_MIN}, {SCALE_MAX}]")
        if len(set(self.subject_ids)) != len(self.subject_ids) or len(set(self.rater_ids)) != len(self.rater_ids):
            raise ValueError("subject and rater ids must be unique")

    @property
    def n(self) -> int:
        return len(self.subject_ids)

    @property
    def k(self) -> int:
        return len(self.rater_ids)

    def column(self, rater_id: str) -> np.ndarray:
        return self.scores[:, self.rater_ids.index(rater_id)]

    def mean_scores(self) -> np.ndarray:
        """Per-subject mean over raters, on raw (unrounded) scores."""
        return self.scores.mean(axis=1)


def icc_2_1(matrix: RaterMatrix | np.ndarray | Sequence[Sequence[float]]) -> float:
    """Shrout-Fleiss ICC(2,1): two-way random effects, absolute agreement, single rater."""
    y = matrix.scores if isinstance(matrix, RaterMatrix) else np.asarray(matrix, dtype=float)
    if y.ndim != 2:
        raise ValueError("ICC needs a subjects x raters grid")
    n, k = y.shape
    if n < 2 or k < 2:
        raise ValueError(f"ICC needs at least 2 subjects and 2 raters, got {n}x{k}")
    grand = y.mean()
    ss_total = float(((y - grand) ** 2).sum())
    ss_rows = k * float(((y.mean(axis=1) - grand) ** 2).sum())
    ss_cols = n * float(((y.mean(axis=0) - grand) ** 2).sum())
    ss_err = ss_total - ss_rows - ss_cols
    ms_rows = ss_rows / (n - 1)
    ms_cols = ss_cols / (k - 1)
    ms_err = ss_err / ((n - 1) * (k - 1))
    denom = ms_rows + (k - 1) * ms_err + (k / n) * (ms_cols - ms_err)
    # the denominator is a non-negative mix of mean squares; zero only for a constant grid
    if ss_total == 0.0 or denom <= 0.0:
        raise DegenerateError("ICC is undefined when every cell is identical")
    return min(1.0, max(-1.0, (ms_rows - ms_err) / denom))


def mae_rmse(x: Sequence[float], y: Sequence[float]) -> tuple[float, float]:
    x, y = _pair(x, y)
    diff = x - y
    return float(np.abs(diff).mean()), math.sqrt(float((diff**2).mean()))


def round_half_up(values: np.ndarray) -> np.ndarray:
    return np.floor(np.asarray(values, dtype=float) + 0.5)


def exact_within1(
    x: Sequence[float], y: Sequence[float], rounding: Rounding | str = Rounding.INTEGER
) -> tuple[float, float]:
    """Percent of pairs that agree exactly and within one scale point."""
    x, y = _pair(x, y)
    if Rounding(rounding) is Rounding.INTEGER:
        x, y = round_half_up(x), round_half_up(y)
    diff = np.abs(x - y)
    n = len(diff)
    return 100.0 * int((diff == 0).sum()) / n, 100.0 * int((diff <= 1.0).sum()) / n


@dataclass(frozen=True)
class AgreementReport:
    pcc: float | None
    scc: float | None
    icc_2_1: float | None
    mae: float
    rmse: float
    exact_pct: float
    within1_pct: float

    def to_dict(self) -> dict:
        return {
            "pcc": self.pcc,
            "scc": self.scc,
            "icc_2_1": self.icc_2_1,
            "mae": self.mae,
            "rmse": self.rmse,
            "exact_pct": self.exact_pct,
            "within1_pct": self.within1_pct,
        }


def _or_none(fn, *args) -> float | None:
    try:
        return fn(*args)
    except DegenerateError:
        return None


def agreement(x: Sequence[float], y: Sequence[float], rounding: Rounding | str = Rounding.INTEGER) -> AgreementReport:
    x, y = _pair(x, y, 2)
    mae, rmse = mae_rmse(x, y)
    exact, within1 = exact_within1(x, y, rounding)
    return AgreementReport(
        pcc=_or_none(pearson, x, y),
        scc=_or_none(spearman, x, y),
        icc_2_1=_or_none(icc_2_1, np.column_stack([x, y])),
        mae=mae,
        rmse=rmse,
        exact_pct=exact,
        within1_pct=within1,
    )


@dataclass(frozen=True)
class PairRow:
    group: str  # "inter-rater", or "vs <target>"
    a: str
    b: str
    report: AgreementReport

    @property
    def label(self) -> str:
        return f"{self.a} vs {self.b}"


def _pairs(matrix: RaterMatrix, systems: Mapping[str, Sequence[float]]):
    """Yield (group, a, b, x, y) in table order."""
    for ra, rb in itertools.combinations(matrix.rater_ids, 2):
        yield INTER_RATER_GROUP, ra, rb, matrix.column(ra), matrix.column(rb)
    targets = [(r, matrix.column(r)) for r in matrix.rater_ids]
    targets.append((MEAN_RATER, matrix.mean_scores()))
    for target, column in targets:
        for name, vector in systems.items():
            yield f"vs {target}", name, target, np.asarray(vector, dtype=float), column


def pairwise_report(
    matrix: RaterMatrix,
    system_scores: Mapping[str, Sequence[float]],
    rounding: Rounding | str = Rounding.INTEGER,
) -> list[PairRow]:
    """Every rater pair, then each system against every rater and the rater mean.

    Rows are grouped by target: all systems vs rater 1, then vs rater 2, ...,
    and last vs the per-subject mean rating.
    """
    for name, vector in system_scores.items():
        if len(vector) != matrix.n:
            raise ValueError(f"system {name!r} has {len(vector)} scores for {matrix.n} subjects")
    return [
        PairRow(group, a, b, agreement(x, y, rounding))
        for group, a, b, x, y in _pairs(matrix, system_scores)
    ]


def disagreement_rows(matrix: RaterMatrix, system_scores: Mapping[str, Sequence[float]]) -> list[dict]:
    """Per-subject absolute differences for every pair, for external plotting."""
    rows = []
    for group, a, b, x, y in _pairs(matrix, system_scores):
        for sid, xa, yb in zip(matrix.subject_ids, x, y):
            rows.append(
                {
                    "group": group,
                    "a": a,
                    "b": b,
                    "subject_id": sid,
                    "a_score": float(xa),
                    "b_score": float(yb),
                    "abs_diff": abs(float(xa) - float(yb)),
                }
            )
    return rows


def read_scores_csv(path: str | os.PathLike) -> tuple[RaterMatrix, dict[str, list[float]]]:
    """Read ``subject_id,rater_id,score`` rows.

    Raters whose id starts with ``sys:`` are returned separately as system
    score vectors (prefix removed), ordered like the matrix subjects.
    """
    cells: dict[tuple[str, str], float] = {}
    subjects: list[str] = []
    raters: list[str] = []
    systems: list[str] = []
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        required = {"subject_id", "rater_id", "score"}
        if reader.fieldnames is None or not required <= set(reader.fieldnames):
            raise DatasetError(f"{path}: header must contain subject_id,rater_id,score")
        for line, row in enumerate(reader, start=2):
            sid, rid = row["subject_id"].strip(), row["rater_id"].strip()
            try:
                score = float(row["score"])
            except (TypeError, ValueError):
                raise DatasetError(f"bad score {row['score']!r}", line=line) from None
            if (sid, rid) in cells:
                raise DatasetError(f"duplicate score for subject {sid!r}, rater {rid!r}", line=line)
            cells[(sid, rid)] = score
            if sid not in subjects:
                subjects.append(sid)
            bucket = systems if rid.startswith(SYSTEM_PREFIX) else raters
            if rid not in bucket:
                bucket.append(rid)

    missing = [f"{s}/{r}" for s in subjects for r in raters if (s, r) not in cells]
    if missing:
        raise DatasetError("rater grid is incomplete, missing " + ", ".join(missing))
    matrix = RaterMatrix(
        subject_ids=tuple(subjects),
        rater_ids=tuple(raters),
        scores=np.array([[cells[(s, r)] for r in raters] for s in subjects], dtype=float).reshape(
            len(subjects), len(raters)
        ),
    )
    out: dict[str, list[float]] = {}
    for sys_id in systems:
        have = {s: cells[(s, sys_id)] for s in subjects if (s, sys_id) in cells}
        name = sys_id[len(SYSTEM_PREFIX):]
        out[name] = align_to_subjects(name, have, matrix.subject_ids)
    return matrix, out


def align_to_subjects(name: str, scores: Mapping[str, float], subject_ids: Iterable[str]) -> list[float]:
    """Order a {subject: score} map like ``subject_ids``; mismatches are errors."""
    subject_ids = list(subject_ids)
    missing = [s for s in subject_ids if s not in scores]
    extra = sorted(set(scores) - set(subject_ids))
    if missing or extra:
        raise SubjectMismatchError(name, missing, extra)
    return [float(scores[s]) for s in subject_ids]
