"""Partition agreement scores and the per-window validity index.

nmi and arand compare a predicted partition against ground truth through a
contingency table. davies_bouldin scores one solution against the points of
a single window; select_best uses it to pick the archive member to report.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .core import ClusteringSolution, WindowBatch, assign_batch

INFINITE_DBI = math.inf


@dataclass
class ContingencyMatrix:
    """Cross-tabulation of two labelings of the same items."""

    counts: np.ndarray
    row_sums: np.ndarray
    col_sums: np.ndarray
    n: int

    @classmethod
    def from_labels(
        cls, truth: Sequence[int], predicted: Sequence[int]
    ) -> "ContingencyMatrix":
        truth = np.asarray(truth)
        predicted = np.asarray(predicted)
        if len(truth) != len(predicted):
            raise ValueError("label sequences must have equal length")
        if len(truth) == 0:
            raise ValueError("label sequences must be non-empty")
        _, ti = np.unique(truth, return_inverse=True)
        _, pi = np.unique(predicted, return_inverse=True)
        counts = np.zeros((ti.max() + 1, pi.max() + 1), dtype=np.int64)
        np.add.at(counts, (ti, pi), 1)
        return cls(counts, counts.sum(axis=1), counts.sum(axis=0), int(len(truth)))


def _entropy(freqs: np.ndarray, n: int) -> float:
    """Shannon entropy in nats; empty cells contribute zero."""
    p = freqs[freqs > 0] / n
    return float(-(p * np.log(p)).sum())


def nmi(truth: Sequence[int], predicted: Sequence[int]) -> float:
    """Normalized mutual information: 2*I(Y;C) / (H(Y) + H(C)), natural log.

    Two all-in-one-class partitions agree perfectly by convention: 1.0.
    """
    cm = ContingencyMatrix.from_labels(truth, predicted)
    h_t = _entropy(cm.row_sums, cm.n)
    h_p = _entropy(cm.col_sums, cm.n)
    if h_t == 0.0 and h_p == 0.0:
        return 1.0
    mi = 0.0
    for i in range(cm.counts.shape[0]):
        for j in range(cm.counts.shape[1]):
            nij = cm.counts[i, j]
            if nij == 0:
                continue
            mi += (nij / cm.n) * math.log(
                nij * cm.n / (cm.row_sums[i] * cm.col_sums[j])
            )
    # the true value lives in [0, 1]; the MI sum can overshoot by an ulp
    return float(min(1.0, max(0.0, 2.0 * mi / (h_t + h_p))))


def _pairs(x: np.ndarray) -> float:
    return float((x * (x - 1) // 2).sum())


def arand(truth: Sequence[int], predicted: Sequence[int]) -> float:
    """Adjusted Rand index via pair counting; 0/0 degenerate cases -> 1.0."""
    cm = ContingencyMatrix.from_labels(truth, predicted)
    if cm.n < 2:
        raise ValueError("arand needs at least two items")
    index = _pairs(cm.counts.astype(np.int64))
    sum_a = _pairs(cm.row_sums)
    sum_b = _pairs(cm.col_sums)
    total = cm.n * (cm.n - 1) / 2
    expected = sum_a * sum_b / total
    max_index = 0.5 * (sum_a + sum_b)
    denom = max_index - expected
    if denom == 0.0:
        return 1.0
    return float((index - expected) / denom)


def davies_bouldin(
    solution: ClusteringSolution,
    window: WindowBatch,
    assignment: Optional[np.ndarray] = None,
) -> float:
    """Windowed Davies-Bouldin index: lower is better.

    Scatter S_i is the mean distance of this window's assigned points to
    prototype i. The index is undefined for K=1, for coincident prototypes,
    and for clusters that received no window points; all three report the
    +inf sentinel so such solutions rank last in selection. Without the
    empty-cluster sentinel a solution could shrink its score arbitrarily by
    parking spare prototypes in unpopulated space.
    """
    k = solution.k
    if k <= 1:
        return INFINITE_DBI
    if assignment is None:
        assignment = assign_batch(solution, window.data)
    assignment = np.asarray(assignment)
    protos = solution.prototype_matrix()
    scatter = np.zeros(k)
    for i in range(k):
        mask = assignment == i
        if not mask.any():
            return INFINITE_DBI
        scatter[i] = float(
            np.linalg.norm(window.data[mask] - protos[i], axis=1).mean()
        )
    centre_d = np.linalg.norm(protos[:, None, :] - protos[None, :, :], axis=2)
    worst = np.zeros(k)
    for i in range(k):
        for j in range(k):
            if i == j:
                continue
            if centre_d[i, j] == 0.0:
                return INFINITE_DBI
            worst[i] = max(worst[i], (scatter[i] + scatter[j]) / centre_d[i, j])
    return float(worst.mean())


def select_best(
    archive, window: WindowBatch
) -> tuple[ClusteringSolution, float]:
    """Archive member with the lowest windowed DBI.

    Ties prefer fewer clusters, then the lower solution id. Returns the
    member and its score.
    """
    members = list(archive)
    if not members:
        raise ValueError("archive is empty")
    scored = [
        (davies_bouldin(s, window), s.k, s.solution_id, s) for s in members
    ]
    scored.sort(key=lambda t: (t[0], t[1], t[2]))
    best = scored[0]
    return best[3], best[0]
