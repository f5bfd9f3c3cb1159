"""Shared domain types and per-cluster streaming update rules.

Everything downstream (tree synopsis, seeders, evolution, engine) trades in
these types. The update rules implement the decayed running-mean merge, the
exponential weight fade with assignment refresh, and staleness pruning.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Iterator, Optional, Sequence

import numpy as np


class SolutionOrigin(enum.Enum):
    """Which pathway produced a solution."""

    ANTTREE = "anttree"
    KMEANS = "kmeans"
    DBSCAN = "dbscan"
    GNG = "gng"
    CROSSOVER = "crossover"
    MUTATION = "mutation"


@dataclass
class DataPoint:
    """One observation: feature vector, optional ground-truth label, arrival index."""

    coords: np.ndarray
    label: Optional[int] = None
    index: int = 0


@dataclass
class WindowBatch:
    """One window of the stream, stored as a dense (n, d) block.

    ``labels`` is None for unlabeled streams. ``start_index`` is the arrival
    index of the first row; indices are contiguous within a window.
    """

    data: np.ndarray
    window_id: int
    labels: Optional[np.ndarray] = None
    start_index: int = 0

    def __post_init__(self) -> None:
        self.data = np.asarray(self.data, dtype=float)
        if self.data.ndim != 2 or self.data.shape[0] == 0:
            raise ValueError("window must be a non-empty (n, d) array")
        if self.labels is not None:
            self.labels = np.asarray(self.labels)
            if len(self.labels) != len(self.data):
                raise ValueError("labels length must match window length")

    def __len__(self) -> int:
        return self.data.shape[0]

    @property
    def dim(self) -> int:
        return self.data.shape[1]

    @property
    def indices(self) -> np.ndarray:
        return np.arange(self.start_index, self.start_index + len(self))

    def points(self) -> Iterator[DataPoint]:
        """Iterate rows as DataPoint objects, in arrival order."""
        for i in range(len(self)):
            label = None if self.labels is None else int(self.labels[i])
            yield DataPoint(self.data[i], label, self.start_index + i)


@dataclass
class ClusterSummary:
    """Prototype vector plus decayed count, fading weight, and the cluster's
    running contribution to the compactness objective."""

    prototype: np.ndarray
    count: float = 1.0
    weight: float = 1.0
    compactness_acc: float = 0.0

    def __post_init__(self) -> None:
        self.prototype = np.asarray(self.prototype, dtype=float)

    def copy(self) -> "ClusterSummary":
        return ClusterSummary(
            self.prototype.copy(), self.count, self.weight, self.compactness_acc
        )


@dataclass
class ObjectiveVector:
    """(compactness, separateness); compactness is minimized, separateness maximized."""

    compactness: float = 0.0
    separateness: float = 0.0

    def as_min_pair(self) -> tuple[float, float]:
        """Both-minimized form used by dominance and hypervolume."""
        return (self.compactness, -self.separateness)

    def copy(self) -> "ObjectiveVector":
        return ObjectiveVector(self.compactness, self.separateness)


@dataclass
class ClusteringSolution:
    """A full candidate clustering: K cluster summaries plus its objectives.

    ``prev_compactness`` is the compactness the solution carried into its
    latest evaluation, before that window's decay-and-fold. Offspring seed
    their compactness from it so a lineage bred within one idle phase pays
    the decay once per window, not once per generation.
    """

    objectives: ObjectiveVector
    clusters: list[ClusterSummary]
    origin: SolutionOrigin
    solution_id: int = -1
    prev_compactness: float = 0.0

    @property
    def k(self) -> int:
        return len(self.clusters)

    @property
    def dim(self) -> int:
        return self.clusters[0].prototype.shape[0]

    def prototype_matrix(self) -> np.ndarray:
        return np.vstack([c.prototype for c in self.clusters])

    def copy(self) -> "ClusteringSolution":
        return ClusteringSolution(
            self.objectives.copy(),
            [c.copy() for c in self.clusters],
            self.origin,
            self.solution_id,
            self.prev_compactness,
        )


@dataclass
class StreamConfig:
    """Engine knobs. gamma=1 disables forgetting (used by conservation checks)."""

    window_size: int = 100
    gamma: float = 0.7
    mu: float = 0.2
    sigma: int = 10
    prune_threshold: float = 0.1
    interval_ms: int = 1000
    idle_generations_cap: int = 10
    rng_seed: int = 0
    l_max: int = 10

    def __post_init__(self) -> None:
        if self.window_size < 1:
            raise ValueError("window_size must be >= 1")
        if not 0.0 < self.gamma <= 1.0:
            raise ValueError("gamma must be in (0, 1]")
        if not 0.0 < self.mu <= 1.0:
            raise ValueError("mu must be in (0, 1]")
        if self.sigma < 1:
            raise ValueError("sigma must be >= 1")
        if self.prune_threshold < 0.0:
            raise ValueError("prune_threshold must be >= 0")
        if self.interval_ms < 0:
            raise ValueError("interval_ms must be >= 0")
        if self.idle_generations_cap < 0:
            raise ValueError("idle_generations_cap must be >= 0")
        if self.l_max < 1:
            raise ValueError("l_max must be >= 1")


# ---------------------------------------------------------------------------
# assignment


def nearest_cluster(solution: ClusteringSolution, point: np.ndarray) -> int:
    """Index of the cluster whose prototype is nearest (ties -> lowest index)."""
    point = np.asarray(point, dtype=float)
    if point.shape != (solution.dim,):
        raise ValueError(
            f"point has dimension {point.shape}, expected ({solution.dim},)"
        )
    dists = np.linalg.norm(solution.prototype_matrix() - point, axis=1)
    return int(np.argmin(dists))


def assign_batch(solution: ClusteringSolution, data: np.ndarray) -> np.ndarray:
    """Nearest-cluster index for each row of ``data`` (ties -> lowest index)."""
    data = np.asarray(data, dtype=float)
    if data.shape[1] != solution.dim:
        raise ValueError("dimension mismatch between window and solution")
    protos = solution.prototype_matrix()
    # (n, k) distance matrix; argmin picks the first minimum.
    d2 = ((data[:, None, :] - protos[None, :, :]) ** 2).sum(axis=2)
    return np.argmin(d2, axis=1)


# ---------------------------------------------------------------------------
# streaming updates


def merge_prototype(
    cluster: ClusterSummary, batch_mean: np.ndarray, batch_count: float, gamma: float
) -> ClusterSummary:
    """Fold a batch (mean z, count m) into a cluster with decayed history.

    prototype <- (w*n*gamma + z*m) / (n*gamma + m); count <- n*gamma + m.
    With gamma=1 this is the exact running mean over all absorbed points.
    """
    if batch_count <= 0:
        raise ValueError("batch_count must be > 0")
    if not 0.0 < gamma <= 1.0:
        raise ValueError("gamma must be in (0, 1]")
    batch_mean = np.asarray(batch_mean, dtype=float)
    if batch_mean.shape != cluster.prototype.shape:
        raise ValueError("batch mean dimension mismatch")
    faded = cluster.count * gamma
    denom = faded + batch_count
    if denom <= 0:
        raise RuntimeError("non-positive merge denominator")
    proto = (cluster.prototype * faded + batch_mean * batch_count) / denom
    out = cluster.copy()
    out.prototype = proto
    out.count = denom
    return out


def fade_weight(
    cluster: ClusterSummary, gamma: float, assigned: float = 0.0
) -> ClusterSummary:
    """One window tick of the weight: weight <- gamma*weight + assigned."""
    if not 0.0 < gamma <= 1.0:
        raise ValueError("gamma must be in (0, 1]")
    if assigned < 0:
        raise ValueError("assigned count must be >= 0")
    out = cluster.copy()
    out.weight = gamma * cluster.weight + assigned
    return out


def prune_outdated(
    solution: ClusteringSolution, threshold: float
) -> ClusteringSolution:
    """Drop clusters with weight < threshold; never return an empty solution.

    If every cluster falls below the threshold the heaviest one survives
    (ties -> lowest index), so K >= 1 always holds.
    """
    if threshold < 0:
        raise ValueError("threshold must be >= 0")
    kept = [c for c in solution.clusters if c.weight >= threshold]
    if not kept:
        best = max(range(solution.k), key=lambda i: (solution.clusters[i].weight, -i))
        kept = [solution.clusters[best]]
    out = solution.copy()
    out.clusters = [c.copy() for c in kept]
    return out


# ---------------------------------------------------------------------------
# chromosome wire format


def serialize_chromosome(solution: ClusteringSolution) -> np.ndarray:
    """Flat record: [compactness, separateness, proto_1 .. proto_K] (K*d+2 floats)."""
    parts = [
        np.array(
            [solution.objectives.compactness, solution.objectives.separateness],
            dtype=float,
        )
    ]
    parts.extend(c.prototype for c in solution.clusters)
    return np.concatenate(parts)


def deserialize_chromosome(
    record: Sequence[float],
    dim: int,
    origin: SolutionOrigin = SolutionOrigin.KMEANS,
    solution_id: int = -1,
) -> ClusteringSolution:
    """Parse a flat record back into a solution.

    Counts, weights, and accumulators are not carried on the wire; they reset
    to their defaults (count=1, weight=1, acc=0).
    """
    record = np.asarray(record, dtype=float)
    if dim < 1:
        raise ValueError("dim must be >= 1")
    if record.ndim != 1 or record.size < dim + 2 or (record.size - 2) % dim != 0:
        raise ValueError(
            f"record of length {record.size} is not 2 + K*{dim} for any K >= 1"
        )
    k = (record.size - 2) // dim
    clusters = [
        ClusterSummary(record[2 + i * dim : 2 + (i + 1) * dim].copy())
        for i in range(k)
    ]
    return ClusteringSolution(
        ObjectiveVector(float(record[0]), float(record[1])),
        clusters,
        origin,
        solution_id,
    )
