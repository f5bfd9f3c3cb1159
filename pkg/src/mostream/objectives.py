"""Window objectives and the bounded Pareto archive.

Compactness is the decayed sum of point-to-prototype distances (lower is
better). Separateness is the mean, over clusters, of the distance to the
nearest neighboring cluster (higher is better). Dominance works on the
both-minimized pair (compactness, -separateness).
"""

from __future__ import annotations

from typing import Optional, Sequence

import numpy as np

from .core import ClusteringSolution, ObjectiveVector, WindowBatch, assign_batch

DEFAULT_CAPACITY = 50
NEIGHBORHOOD_SIZE = 3


def update_compactness(
    solution: ClusteringSolution,
    window: WindowBatch,
    assignment: np.ndarray,
    gamma: float,
) -> float:
    """Fold one window into the compactness objective, in place.

    compactness <- gamma * previous + sum_i ||x_i - w_assign(i)||, with the
    prototypes as they stand at the call (window start). Per-cluster
    accumulators get the same treatment for reuse by the validity index.
    """
    if not 0.0 < gamma <= 1.0:
        raise ValueError("gamma must be in (0, 1]")
    assignment = np.asarray(assignment)
    if len(assignment) != len(window):
        raise ValueError("assignment length must match window length")
    protos = solution.prototype_matrix()
    dists = np.linalg.norm(window.data - protos[assignment], axis=1)
    for idx, cluster in enumerate(solution.clusters):
        contrib = float(dists[assignment == idx].sum())
        cluster.compactness_acc = gamma * cluster.compactness_acc + contrib
    # offspring inherit the entry value, so the decay is paid once per window
    solution.prev_compactness = float(solution.objectives.compactness)
    value = gamma * solution.objectives.compactness + float(dists.sum())
    solution.objectives.compactness = value
    return value


def _knn_neighborhood(protos: np.ndarray) -> dict[int, set[int]]:
    k = len(protos)
    if k <= 1:
        return {0: set()} if k else {}
    d = np.linalg.norm(protos[:, None, :] - protos[None, :, :], axis=2)
    np.fill_diagonal(d, np.inf)
    out: dict[int, set[int]] = {}
    for i in range(k):
        if k - 1 <= NEIGHBORHOOD_SIZE:
            out[i] = set(range(k)) - {i}
        else:
            order = np.argsort(d[i], kind="stable")[:NEIGHBORHOOD_SIZE]
            out[i] = set(int(j) for j in order)
    return out


def default_neighborhood(solution: ClusteringSolution) -> dict[int, set[int]]:
    """Each cluster's neighbors: its 3 nearest clusters by prototype distance
    (everything else when K <= 4)."""
    return _knn_neighborhood(solution.prototype_matrix())


def separateness(
    solution: ClusteringSolution,
    neighborhood: Optional[dict[int, set[int]]] = None,
    active: Optional[Sequence[int]] = None,
) -> float:
    """Mean over clusters of the min distance to a neighboring prototype.

    ``active`` names the clusters that currently hold points; only they
    contribute terms and only they count as neighbors. Memberless clusters
    must stay out of the mean: a prototype parked far from the data would
    otherwise buy unbounded separateness at zero compactness cost. With at
    most one (active) cluster there is nothing to be separate from: 0.
    """
    if active is None:
        act = list(range(solution.k))
    else:
        act = sorted(set(int(i) for i in active))
        if act and (act[0] < 0 or act[-1] >= solution.k):
            raise ValueError("active cluster indices out of range")
    if len(act) <= 1:
        return 0.0
    protos = solution.prototype_matrix()
    if neighborhood is None:
        sub = _knn_neighborhood(protos[act])
        neighborhood = {act[i]: {act[j] for j in nbrs} for i, nbrs in sub.items()}
    in_act = set(act)
    vals = []
    for i in act:
        nbrs = set(neighborhood.get(i, set())) & in_act - {i}
        if not nbrs:
            raise ValueError(f"cluster {i} has an empty neighborhood")
        dists = [float(np.linalg.norm(protos[i] - protos[j])) for j in sorted(nbrs)]
        vals.append(min(dists))
    return float(np.mean(vals))


def evaluate_solution(
    solution: ClusteringSolution, window: WindowBatch, gamma: float
) -> None:
    """Refresh both objectives against a window, in place.

    Clusters the window does not feed are dropped first: a memberless
    cluster is no part of the clustering the data sees, and letting it ride
    would poison the validity index while costing nothing in compactness.
    Dropping cannot reassign anyone; a point's nearest prototype is fed by
    that very point. Treats the current compactness value as the decayed
    history prefix, so a fresh solution should carry 0 there and an
    offspring its inherited value.
    """
    raw = assign_batch(solution, window.data)
    fed, labels = np.unique(raw, return_inverse=True)
    if fed.size < solution.k:
        solution.clusters = [solution.clusters[int(i)] for i in fed]
    update_compactness(solution, window, labels, gamma)
    solution.objectives.separateness = separateness(solution)


def dominates(a: ObjectiveVector, b: ObjectiveVector) -> bool:
    """True when a is no worse in both minimized components and better in one."""
    a1, a2 = a.as_min_pair()
    b1, b2 = b.as_min_pair()
    return a1 <= b1 and a2 <= b2 and (a1 < b1 or a2 < b2)


class ParetoArchive:
    """Mutually non-dominated solutions, capacity-bounded.

    Inserts reject dominated or objective-duplicate candidates and evict any
    members the newcomer dominates. On overflow the member with the smallest
    crowding distance goes (objective-space extremes are kept).
    """

    def __init__(self, capacity: int = DEFAULT_CAPACITY):
        if capacity < 1:
            raise ValueError("capacity must be >= 1")
        self.capacity = capacity
        self.solutions: list[ClusteringSolution] = []

    def __len__(self) -> int:
        return len(self.solutions)

    def __iter__(self):
        return iter(self.solutions)

    def insert(self, candidate: ClusteringSolution) -> bool:
        """Try to add a solution; returns True if it now sits in the archive."""
        pair = candidate.objectives.as_min_pair()
        for member in self.solutions:
            mp = member.objectives.as_min_pair()
            if dominates(member.objectives, candidate.objectives) or mp == pair:
                return False
        self.solutions = [
            m
            for m in self.solutions
            if not dominates(candidate.objectives, m.objectives)
        ]
        self.solutions.append(candidate)
        self.solutions.sort(key=lambda s: s.solution_id)
        if len(self.solutions) > self.capacity:
            self._evict_most_crowded()
        return True

    def _evict_most_crowded(self) -> None:
        dist = crowding_distances([s.objectives for s in self.solutions])
        # smallest crowding distance loses; ties evict the newer solution
        victim = min(
            range(len(self.solutions)),
            key=lambda i: (dist[i], -self.solutions[i].solution_id),
        )
        del self.solutions[victim]

    def validate(self) -> None:
        """Pairwise non-dominance audit (test hook)."""
        for i, a in enumerate(self.solutions):
            for j, b in enumerate(self.solutions):
                if i != j and dominates(a.objectives, b.objectives):
                    raise AssertionError(
                        f"archive member {a.solution_id} dominates {b.solution_id}"
                    )


def crowding_distances(objectives: list[ObjectiveVector]) -> np.ndarray:
    """NSGA-II crowding distance over the two minimized components."""
    n = len(objectives)
    out = np.zeros(n)
    if n <= 2:
        out[:] = np.inf
        return out
    pairs = np.array([o.as_min_pair() for o in objectives])
    for dim in range(pairs.shape[1]):
        order = np.argsort(pairs[:, dim], kind="stable")
        lo, hi = pairs[order[0], dim], pairs[order[-1], dim]
        out[order[0]] = out[order[-1]] = np.inf
        span = hi - lo
        if span <= 0:
            continue
        for rank in range(1, n - 1):
            i = order[rank]
            out[i] += (pairs[order[rank + 1], dim] - pairs[order[rank - 1], dim]) / span
    return out


def hypervolume(archive: ParetoArchive, reference: ObjectiveVector) -> float:
    """Area of objective space dominated by the archive, up to ``reference``.

    Works on the both-minimized pair; every member must sit inside the
    reference box. Empty archive -> 0.
    """
    if not archive.solutions:
        return 0.0
    ref = reference.as_min_pair()
    pts = sorted(s.objectives.as_min_pair() for s in archive.solutions)
    for p in pts:
        if p[0] > ref[0] or p[1] > ref[1]:
            raise ValueError(f"member {p} outside reference box {ref}")
    # Non-dominated set sorted by first component ascending has the second
    # component strictly descending; sweep left to right.
    area = 0.0
    for i, (x, y) in enumerate(pts):
        next_x = pts[i + 1][0] if i + 1 < len(pts) else ref[0]
        area += (next_x - x) * (ref[1] - y)
    return float(area)


def hypervolume_in_box(archive: ParetoArchive, reference: ObjectiveVector) -> float:
    """Report-friendly variant: silently ignores members outside the box."""
    inside = ParetoArchive(capacity=max(1, len(archive)))
    ref = reference.as_min_pair()
    inside.solutions = [
        s
        for s in archive.solutions
        if s.objectives.as_min_pair()[0] <= ref[0]
        and s.objectives.as_min_pair()[1] <= ref[1]
    ]
    return hypervolume(inside, reference)
