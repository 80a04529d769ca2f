"""Selecting a representative, non-redundant set of explained instances.

Rows of the explanation matrix are instances, columns are vocabulary
features, entries are absolute surrogate weights.  A feature's global
importance is the square root of its column sum, and coverage of a row set
is the total importance of features touched by at least one selected row.
Greedy selection on this monotone submodular objective carries the usual
1 - 1/e guarantee, checked against a brute-force oracle in the tests.
"""
from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations
from typing import Iterable, Sequence

import numpy as np

from .errors import ConfigError, ShapeError, SizeError
from .explain import Explanation

ENUMERATION_LIMIT = 15


@dataclass
class ExplanationMatrix:
    """n x d' matrix of absolute weights plus global importance per column."""

    W: np.ndarray
    instance_ids: list[str]
    importance: np.ndarray

    @property
    def n(self) -> int:
        return int(self.W.shape[0])


@dataclass
class PickResult:
    """Greedy selection order with the coverage value after each addition."""

    selected: list[int]
    coverage_trace: list[float]


def build_matrix(explanations: Sequence[Explanation], dim: int) -> ExplanationMatrix:
    """Stack absolute explanation weights into a matrix and score columns."""
    W = np.zeros((len(explanations), dim))
    ids = []
    for i, exp in enumerate(explanations):
        for col, _tok, weight in exp.features:
            if not 0 <= col < dim:
                raise ShapeError(f"column {col} outside dimension {dim}")
            W[i, col] = abs(weight)
        ids.append(exp.instance_id)
    importance = np.sqrt(W.sum(axis=0))
    return ExplanationMatrix(W=W, instance_ids=ids, importance=importance)


def coverage(V: Iterable[int], W: np.ndarray, importance: np.ndarray) -> float:
    """Total importance of columns nonzero in at least one row of V."""
    rows = list(V)
    if not rows:
        return 0.0
    touched = (W[rows] > 0).any(axis=0)
    return float(importance[touched].sum())


def submodular_pick(W: np.ndarray, importance: np.ndarray, B: int) -> PickResult:
    """Greedy maximum-marginal-gain selection of min(B, n) rows.

    Ties break toward the lowest row index; once every remaining row has
    zero gain, the budget fills in index order.
    """
    if B < 1:
        raise ConfigError("budget B must be at least 1")
    n = W.shape[0]
    covered = np.zeros(W.shape[1], dtype=bool)
    remaining = list(range(n))
    selected: list[int] = []
    trace: list[float] = []
    total = 0.0
    while remaining and len(selected) < min(B, n):
        gains = [
            float(importance[(W[i] > 0) & ~covered].sum()) for i in remaining
        ]
        best = int(np.argmax(gains))  # argmax keeps the lowest index on ties
        row = remaining.pop(best)
        covered |= W[row] > 0
        total += gains[best]
        selected.append(row)
        trace.append(total)
    return PickResult(selected=selected, coverage_trace=trace)


def brute_force_pick(
    W: np.ndarray, importance: np.ndarray, B: int
) -> tuple[frozenset[int], float]:
    """Exact coverage maximizer over all row subsets of size at most B."""
    n = W.shape[0]
    if n > ENUMERATION_LIMIT:
        raise SizeError(f"enumeration limited to n <= {ENUMERATION_LIMIT}")
    best_set: frozenset[int] = frozenset()
    best_val = 0.0
    for size in range(1, min(B, n) + 1):
        for combo in combinations(range(n), size):
            val = coverage(combo, W, importance)
            if val > best_val:
                best_val = val
                best_set = frozenset(combo)
    return best_set, best_val
