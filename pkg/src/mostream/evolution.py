"""Idle-time genetic improvement of the archive.

While the stream is quiet the engine breeds archive members: the best
sigma solutions by scalar fitness pair off for single-point crossover over
cluster blocks, and every parent also yields a coordinate-jitter mutant.
Offspring are scored against the latest window snapshot and offered to the
archive; dominated ones simply vanish.
"""

from __future__ import annotations

import time
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .core import ClusteringSolution, SolutionOrigin, StreamConfig, WindowBatch
from .objectives import ParetoArchive, evaluate_solution


@dataclass
class IdleBudget:
    """Remaining idle work: a generation runs only if both the counter and
    the wall deadline (monotonic clock, None = unbounded) allow it."""

    generations_remaining: int
    wall_deadline: Optional[float] = None

    def allows(self) -> bool:
        if self.generations_remaining <= 0:
            return False
        if self.wall_deadline is not None and time.monotonic() >= self.wall_deadline:
            return False
        return True


def fitness_score(solution: ClusteringSolution) -> float:
    """Scalar ranking helper: compactness - separateness, lower is better."""
    return solution.objectives.compactness - solution.objectives.separateness


def select_parents(archive: ParetoArchive, sigma: int) -> list[ClusteringSolution]:
    """The min(sigma, |archive|) members with best fitness; ties by id."""
    if sigma < 1:
        raise ValueError("sigma must be >= 1")
    members = sorted(archive, key=lambda s: (fitness_score(s), s.solution_id))
    return members[:sigma]


def crossover(
    p1: ClusteringSolution, p2: ClusteringSolution, i: int
) -> tuple[ClusteringSolution, ClusteringSolution]:
    """Single-point exchange of cluster blocks at cut ``i``.

    With A the smaller-K parent (ties p1) and B the other: child one is
    A[1..i] + B[i+1..K_B], child two is A[i+1..K_A] + B[1..i]. Children keep
    the parents' K values, so K never drifts through crossover alone.
    """
    k_min = min(p1.k, p2.k)
    if k_min < 3:
        raise ValueError("crossover needs both parents to have K >= 3")
    if not 1 < i < k_min:
        raise ValueError(f"cut must satisfy 1 < i < {k_min}")
    a, b = (p1, p2) if p1.k <= p2.k else (p2, p1)
    c1 = ClusteringSolution(
        a.objectives.copy(),
        [c.copy() for c in a.clusters[:i]] + [c.copy() for c in b.clusters[i:]],
        SolutionOrigin.CROSSOVER,
    )
    c2 = ClusteringSolution(
        a.objectives.copy(),
        [c.copy() for c in a.clusters[i:]] + [c.copy() for c in b.clusters[:i]],
        SolutionOrigin.CROSSOVER,
    )
    return c1, c2


def mutate(solution: ClusteringSolution, mu: float, seed: int) -> ClusteringSolution:
    """Jitter max(1, round(mu*d)) coordinates of every prototype.

    Each chosen coordinate moves by a uniform fraction of its own magnitude,
    v <- v +/- rho*v with rho ~ U(0,1), so zeros are fixed points and scale
    is respected. Counts and weights ride along unchanged.
    """
    if not 0.0 < mu <= 1.0:
        raise ValueError("mu must be in (0, 1]")
    rng = np.random.default_rng(seed)
    out = solution.copy()
    out.origin = SolutionOrigin.MUTATION
    out.solution_id = -1
    d = solution.dim
    n_mut = max(1, round(mu * d))
    for cluster in out.clusters:
        positions = rng.choice(d, size=n_mut, replace=False)
        for pos in positions:
            rho = rng.uniform(0.0, 1.0)
            sign = 1.0 if rng.uniform(0.0, 1.0) < 0.5 else -1.0
            cluster.prototype[pos] += sign * rho * cluster.prototype[pos]
    return out


def prototype_set_distance(a: ClusteringSolution, b: ClusteringSolution) -> float:
    """Symmetric mean nearest-prototype distance between two solutions."""
    pa, pb = a.prototype_matrix(), b.prototype_matrix()
    d = np.linalg.norm(pa[:, None, :] - pb[None, :, :], axis=2)
    return float(0.5 * (d.min(axis=1).mean() + d.min(axis=0).mean()))


def breed(
    parents: list[ClusteringSolution],
    snapshot: WindowBatch,
    cfg: StreamConfig,
    rng: np.random.Generator,
    allot_id: Callable[[], int],
    should_stop: Optional[Callable[[], bool]] = None,
) -> list[ClusteringSolution]:
    """One round of offspring from an ordered parent list, fully evaluated.

    Consecutive parents pair for crossover (skipped when either has K < 3);
    every parent also contributes one mutant. The inherited compactness
    history comes from the nearer parent (crossover) or the source parent
    (mutation), taken at its pre-window value: evaluation then applies the
    same single decay-and-fold the parent received, so a lineage bred over
    many generations inside one idle phase does not compound the decay.
    ``should_stop`` is polled between offspring evaluations.
    """
    offspring: list[ClusteringSolution] = []
    jobs: list[tuple[ClusteringSolution, float]] = []
    for j in range(0, len(parents) - 1, 2):
        p1, p2 = parents[j], parents[j + 1]
        k_min = min(p1.k, p2.k)
        if k_min < 3:
            continue
        cut = int(rng.integers(2, k_min))
        c1, c2 = crossover(p1, p2, cut)
        for child in (c1, c2):
            nearer = min(
                (p1, p2), key=lambda p: (prototype_set_distance(child, p), p.solution_id)
            )
            jobs.append((child, nearer.prev_compactness))
    for parent in parents:
        mutant = mutate(parent, cfg.mu, int(rng.integers(0, 2**63 - 1)))
        jobs.append((mutant, parent.prev_compactness))
    for child, prefix in jobs:
        if should_stop is not None and should_stop():
            break
        child.objectives.compactness = prefix
        child.objectives.separateness = 0.0
        evaluate_solution(child, snapshot, cfg.gamma)
        child.solution_id = allot_id()
        offspring.append(child)
    return offspring


def idle_generation(
    archive: ParetoArchive,
    snapshot: WindowBatch,
    cfg: StreamConfig,
    seed: int,
    allot_id: Callable[[], int],
    should_stop: Optional[Callable[[], bool]] = None,
) -> ParetoArchive:
    """One select/crossover/mutate/evaluate/insert cycle on the archive."""
    parents = select_parents(archive, cfg.sigma)
    rng = np.random.default_rng(seed)
    for child in breed(parents, snapshot, cfg, rng, allot_id, should_stop):
        archive.insert(child)
    return archive
