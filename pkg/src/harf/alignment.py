"""Unit-cost Levenshtein alignment and longest common subsequence."""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import NamedTuple, Sequence


class OpKind(str, enum.Enum):
    MATCH = "match"
    SUBSTITUTE = "substitute"
    DELETE = "delete"
    INSERT = "insert"


MATCH, SUBSTITUTE, DELETE, INSERT = OpKind.MATCH, OpKind.SUBSTITUTE, OpKind.DELETE, OpKind.INSERT


class EditOp(NamedTuple):
    kind: OpKind
    ref_index: int | None
    pred_index: int | None
    ref: str | None = None
    pred: str | None = None

    def to_dict(self) -> dict:
        return {
            "op": self.kind.value,
            "ref_index": self.ref_index,
            "pred_index": self.pred_index,
            "ref": self.ref,
            "pred": self.pred,
        }


@dataclass(frozen=True)
class Alignment:
    ops: tuple[EditOp, ...]
    match_count: int
    s_count: int
    d_count: int
    i_count: int

    @classmethod
    def from_ops(cls, ops: Sequence[EditOp]) -> "Alignment":
        counts = {MATCH: 0, SUBSTITUTE: 0, DELETE: 0, INSERT: 0}
        for op in ops:
            counts[op.kind] += 1
        return cls(tuple(ops), counts[MATCH], counts[SUBSTITUTE], counts[DELETE], counts[INSERT])

    @property
    def distance(self) -> int:
        return self.s_count + self.d_count + self.i_count

    @property
    def ref_length(self) -> int:
        return self.match_count + self.s_count + self.d_count

    @property
    def pred_length(self) -> int:
        return self.match_count + self.s_count + self.i_count

    def reference(self) -> tuple[str, ...]:
        return tuple(op.ref for op in self.ops if op.ref_index is not None)

    def prediction(self) -> tuple[str, ...]:
        return tuple(op.pred for op in self.ops if op.pred_index is not None)

    def apply(self, reference: Sequence[str]) -> tuple[str, ...]:
        """Rewrite ``reference`` with the ops; yields the predicted sequence."""
        out = []
        for op in self.ops:
            if op.kind is MATCH:
                out.append(reference[op.ref_index])
            elif op.kind is not DELETE:
                out.append(op.pred)
        return tuple(out)

    def to_dict(self) -> dict:
        return {
            "matches": self.match_count,
            "S": self.s_count,
            "D": self.d_count,
            "I": self.i_count,
            "distance": self.distance,
            "ops": [op.to_dict() for op in self.ops],
        }


def _cost_matrix(ref: Sequence[str], pred: Sequence[str]) -> tuple[list[list[int]], int]:
    """Edit-cost table with ties between equal-distance paths broken by indel count.

    A substitution costs ``unit`` and an insertion/deletion ``unit + 1``, where
    ``unit`` exceeds any possible number of indels. Minimising this single
    integer minimises the Levenshtein distance first and the number of
    insertions plus deletions second, so every pair of sequences gets one
    well-defined (S, D, I) triple.
    """
    n, m = len(ref), len(pred)
    unit = n + m + 1
    gap = unit + 1
    prev = [j * gap for j in range(m + 1)]
    rows = [prev]
    for i, r in enumerate(ref, 1):
        cur = [i * gap] * (m + 1)
        left = i * gap
        for j in range(1, m + 1):
            best = prev[j - 1] + (unit if r != pred[j - 1] else 0)
            if prev[j] + gap < best:
                best = prev[j] + gap
            if left + gap < best:
                best = left + gap
            cur[j] = left = best
        rows.append(cur)
        prev = cur
    return rows, unit


def align(reference: Sequence[str], predicted: Sequence[str]) -> Alignment:
    """Minimum-edit alignment of ``predicted`` against ``reference``.

    Among alignments with the least edits, those with the fewest
    insertions/deletions win (substitution over delete+insert). Remaining ties
    are broken while tracing back from the bottom-right corner: diagonal
    (match/substitute) first, then deletion, then insertion.
    """
    ref = tuple(reference)
    pred = tuple(predicted)
    dp, unit = _cost_matrix(ref, pred)
    gap = unit + 1

    ops: list[EditOp] = []
    i, j = len(ref), len(pred)
    while i or j:
        cost = dp[i][j]
        if i and j:
            r, p = ref[i - 1], pred[j - 1]
            same = r == p
            if dp[i - 1][j - 1] + (0 if same else unit) == cost:
                i -= 1
                j -= 1
                ops.append(EditOp(MATCH if same else SUBSTITUTE, i, j, r, p))
                continue
        if i and dp[i - 1][j] + gap == cost:
            i -= 1
            ops.append(EditOp(DELETE, i, None, ref[i], None))
        else:
            j -= 1
            ops.append(EditOp(INSERT, None, j, None, pred[j]))
    ops.reverse()
    return Alignment.from_ops(ops)


def edit_distance(reference: Sequence[str], predicted: Sequence[str]) -> int:
    """Unit-cost Levenshtein distance."""
    dp, unit = _cost_matrix(tuple(reference), tuple(predicted))
    return dp[-1][-1] // unit


def lcs_length(reference: Sequence[str], predicted: Sequence[str]) -> int:
    """Length of a longest common subsequence (order-preserving, gaps allowed)."""
    pred = tuple(predicted)
    prev = [0] * (len(pred) + 1)
    for r in reference:
        cur = [0] * (len(pred) + 1)
        for j, p in enumerate(pred, 1):
            if r == p:
                cur[j] = prev[j - 1] + 1
            else:
                cur[j] = cur[j - 1] if cur[j - 1] > prev[j] else prev[j]
        prev = cur
    return prev[-1]
