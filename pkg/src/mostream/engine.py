"""Windowed streaming driver.

The first window builds the tree synopsis and seeds the archive through
multiple clustering routes plus one breeding pass. Every later window flows
through a fixed pipeline: points map into the tree, each archive member
absorbs the window and fades, objectives refresh, the tree's macro view is
re-offered, and the archive is re-screened for dominance before the window
report goes out. Idle time between windows runs archive generations.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import Callable, Iterable, Optional

import numpy as np

from .anttree import TreeSynopsis, build_initial_tree
from .core import (
    ClusteringSolution,
    DataPoint,
    ObjectiveVector,
    StreamConfig,
    WindowBatch,
    assign_batch,
    fade_weight,
    merge_prototype,
    prune_outdated,
    serialize_chromosome,
)
from .evolution import IdleBudget, breed, fitness_score, idle_generation, select_parents
from .metrics import arand, davies_bouldin, nmi, select_best
from .objectives import (
    ParetoArchive,
    evaluate_solution,
    hypervolume_in_box,
    separateness,
    update_compactness,
)
from .seeders import SeederParams, kmeans_sweep, seed_dbscan, seed_gng

GAMMA_ONE_REF_WINDOWS = 100  # reference head-room when gamma=1 disables decay


@dataclass
class WindowReport:
    """Per-window summary emitted exactly once, in window order."""

    window_id: int
    archive_size: int
    best_dbi: float
    best_fitness: float
    nmi: Optional[float]
    arand: Optional[float]
    hypervolume: float
    stored_vectors: int
    elapsed_ms: Optional[float]

    def to_dict(self) -> dict:
        return {
            "window_id": self.window_id,
            "archive_size": self.archive_size,
            "best_dbi": self.best_dbi,
            "best_fitness": self.best_fitness,
            "nmi": self.nmi,
            "arand": self.arand,
            "hypervolume": self.hypervolume,
            "stored_vectors": self.stored_vectors,
            "elapsed_ms": self.elapsed_ms,
        }


@dataclass
class FinalSelection:
    """End-of-stream deliverable: the chosen solution and its last-window view."""

    solution: ClusteringSolution
    dbi: float
    indices: np.ndarray
    assignments: np.ndarray
    chromosome: np.ndarray


@dataclass
class EngineState:
    """Everything the stream driver carries between windows."""

    cfg: StreamConfig
    seeder_params: SeederParams
    tree: TreeSynopsis
    archive: ParetoArchive
    window_id: int
    dim: int
    last_window: WindowBatch
    hv_reference: ObjectiveVector
    macro_compactness: float = 0.0
    next_solution_id: int = 0
    idle_counter: int = 0
    deterministic: bool = True
    reports: list[WindowReport] = field(default_factory=list)

    def allot_id(self) -> int:
        out = self.next_solution_id
        self.next_solution_id += 1
        return out

    def stored_vector_count(self) -> int:
        """Real vectors in the synopsis: tree prototypes plus archive
        prototypes. The retained window snapshot is working state, not
        synopsis, and is constant-size anyway."""
        return self.tree.node_count() + sum(s.k for s in self.archive)


def _derive_seed(base: int, window_id: int, counter: int) -> int:
    seq = np.random.SeedSequence([base, window_id, counter])
    return int(seq.generate_state(1, np.uint64)[0])


def _window_report(
    state: EngineState, window: WindowBatch, elapsed_ms: Optional[float]
) -> WindowReport:
    best, best_dbi = select_best(state.archive, window)
    best_fit = min(fitness_score(s) for s in state.archive)
    score_nmi = score_arand = None
    if window.labels is not None and len(window) >= 2:
        pred = assign_batch(best, window.data)
        score_nmi = nmi(window.labels, pred)
        score_arand = arand(window.labels, pred)
    report = WindowReport(
        window_id=window.window_id,
        archive_size=len(state.archive),
        best_dbi=best_dbi,
        best_fitness=best_fit,
        nmi=score_nmi,
        arand=score_arand,
        hypervolume=hypervolume_in_box(state.archive, state.hv_reference),
        stored_vectors=state.stored_vector_count(),
        elapsed_ms=None if state.deterministic else elapsed_ms,
    )
    state.reports.append(report)
    return report


def initialize(
    first_window: WindowBatch,
    cfg: StreamConfig,
    seeder_params: Optional[SeederParams] = None,
    deterministic: bool = True,
) -> EngineState:
    """Build the tree, seed the population, breed once, fill the archive."""
    t0 = time.perf_counter()
    params = seeder_params or SeederParams()
    tree = build_initial_tree(first_window, cfg.l_max)
    tree.aggregate()

    population: list[ClusteringSolution] = []
    macro = tree.macro_clusters()
    evaluate_solution(macro, first_window, cfg.gamma)
    population.append(macro)
    if len(first_window) >= params.kmeans_k_min:
        population.extend(
            kmeans_sweep(first_window, params, cfg.rng_seed, cfg.gamma)
        )
    population.append(
        seed_dbscan(
            first_window, params.dbscan_min_pts, params.dbscan_radius, cfg.gamma
        )
    )
    if len(first_window) >= 2:
        population.append(seed_gng(first_window, params, cfg.rng_seed, cfg.gamma))

    state = EngineState(
        cfg=cfg,
        seeder_params=params,
        tree=tree,
        archive=ParetoArchive(),
        window_id=first_window.window_id,
        dim=first_window.dim,
        last_window=first_window,
        hv_reference=ObjectiveVector(),
        macro_compactness=macro.objectives.compactness,
        deterministic=deterministic,
    )
    for sol in population:
        sol.solution_id = state.allot_id()

    # one breeding pass over the seed population before anything is published
    parents = sorted(population, key=lambda s: (fitness_score(s), s.solution_id))
    parents = parents[: cfg.sigma]
    rng = np.random.default_rng(
        _derive_seed(cfg.rng_seed, first_window.window_id, state.idle_counter)
    )
    state.idle_counter += 1
    offspring = breed(parents, first_window, cfg, rng, state.allot_id)
    population.extend(offspring)

    worst_c = max(s.objectives.compactness for s in population)
    horizon = 1.0 / (1.0 - cfg.gamma) if cfg.gamma < 1.0 else GAMMA_ONE_REF_WINDOWS
    state.hv_reference = ObjectiveVector(2.0 * (worst_c + 1.0) * horizon, 0.0)

    for sol in sorted(population, key=lambda s: s.solution_id):
        state.archive.insert(sol)
    elapsed = (time.perf_counter() - t0) * 1000.0
    _window_report(state, first_window, elapsed)
    return state


def process_window(state: EngineState, window: WindowBatch) -> WindowReport:
    """Commit one window: map, absorb, fade, rescore, re-offer, re-screen, report."""
    t0 = time.perf_counter()
    if window.dim != state.dim:
        raise ValueError(
            f"window {window.window_id} has dimension {window.dim}, stream is {state.dim}"
        )
    if window.window_id != state.window_id + 1:
        raise ValueError(
            f"window ids must be sequential: got {window.window_id} "
            f"after {state.window_id}"
        )
    cfg = state.cfg

    # (1) stream points through the tree synopsis. Counts age once per
    # window up front; absorption then merges at gamma=1 (exact running
    # mean), so a window of absorptions composes to the batch update
    # count -> gamma*count + absorbed rather than decaying per point.
    state.tree.decay_counts(cfg.gamma)
    for i in range(len(window)):
        state.tree.map_point(
            DataPoint(window.data[i], None, window.start_index + i), 1.0
        )

    # (2) each member absorbs the window: assign, score against window-start
    # prototypes, then fold the per-cluster batches in
    updated: list[tuple[ClusteringSolution, np.ndarray]] = []
    for member in state.archive:
        clone = member.copy()
        labels = assign_batch(clone, window.data)
        update_compactness(clone, window, labels, cfg.gamma)
        assigned = np.zeros(clone.k)
        for ci in range(clone.k):
            mask = labels == ci
            m = float(mask.sum())
            assigned[ci] = m
            if m > 0:
                clone.clusters[ci] = merge_prototype(
                    clone.clusters[ci], window.data[mask].mean(axis=0), m, cfg.gamma
                )
        updated.append((clone, assigned))

    # (3) fade weights, prune what starved (solutions and tree alike)
    pruned: list[ClusteringSolution] = []
    for clone, assigned in updated:
        clone.clusters = [
            fade_weight(c, cfg.gamma, assigned[i]) for i, c in enumerate(clone.clusters)
        ]
        pruned.append(prune_outdated(clone, cfg.prune_threshold))
    state.tree.fade_and_prune(cfg.gamma, cfg.prune_threshold)

    # (4) separateness reflects the moved/pruned prototypes, counting only
    # the clusters the window still feeds
    for clone in pruned:
        held = np.unique(assign_batch(clone, window.data))
        clone.objectives.separateness = separateness(clone, active=held.tolist())

    # (5) the tree re-offers its macro view as a candidate
    macro = state.tree.macro_clusters(solution_id=-1)
    macro.objectives.compactness = state.macro_compactness
    evaluate_solution(macro, window, cfg.gamma)
    macro.solution_id = state.allot_id()
    state.macro_compactness = macro.objectives.compactness

    # (6) re-screen: rebuild the archive from updated members, then the offer
    rebuilt = ParetoArchive(state.archive.capacity)
    for clone in sorted(pruned, key=lambda s: s.solution_id):
        rebuilt.insert(clone)
    rebuilt.insert(macro)
    state.archive = rebuilt

    # (7) commit and report
    state.window_id = window.window_id
    state.last_window = window
    elapsed = (time.perf_counter() - t0) * 1000.0
    return _window_report(state, window, elapsed)


def on_idle(
    state: EngineState,
    budget: IdleBudget,
    should_stop: Optional[Callable[[], bool]] = None,
) -> int:
    """Run idle generations until the budget, deadline, or caller says stop."""
    deadline = budget.wall_deadline
    stop_fn: Optional[Callable[[], bool]] = None
    if deadline is not None or should_stop is not None:

        def stop_fn() -> bool:
            if should_stop is not None and should_stop():
                return True
            return deadline is not None and time.monotonic() >= deadline

    gens = 0
    while budget.allows():
        if should_stop is not None and should_stop():
            break
        seed = _derive_seed(state.cfg.rng_seed, state.window_id, state.idle_counter)
        state.idle_counter += 1
        idle_generation(
            state.archive, state.last_window, state.cfg, seed, state.allot_id, stop_fn
        )
        budget.generations_remaining -= 1
        gens += 1
    return gens


def finalize(state: EngineState) -> FinalSelection:
    """Pick the lowest-DBI member on the last window and package it."""
    best, dbi = select_best(state.archive, state.last_window)
    window = state.last_window
    labels = assign_batch(best, window.data)
    return FinalSelection(
        solution=best.copy(),
        dbi=dbi,
        indices=window.indices,
        assignments=labels,
        chromosome=serialize_chromosome(best),
    )


def run_stream(
    batches: Iterable[WindowBatch],
    cfg: StreamConfig,
    seeder_params: Optional[SeederParams] = None,
    deterministic: bool = True,
    pace: bool = False,
    on_report: Optional[Callable[[WindowReport], None]] = None,
    on_window_end: Optional[Callable[[EngineState], None]] = None,
) -> tuple[EngineState, FinalSelection]:
    """Drive a whole stream: initialize, then process/idle per window.

    Deterministic mode runs exactly idle_generations_cap generations between
    windows. Wall-clock mode (deterministic=False) runs generations until
    interval_ms elapses; with pace=True it also sleeps out the remainder to
    emulate live arrival.
    """
    state: Optional[EngineState] = None
    for window in batches:
        if state is None:
            state = initialize(window, cfg, seeder_params, deterministic)
            report = state.reports[-1]
        else:
            report = process_window(state, window)
        if on_report is not None:
            on_report(report)
        if on_window_end is not None:
            on_window_end(state)
        if deterministic:
            budget = IdleBudget(cfg.idle_generations_cap)
        else:
            deadline = time.monotonic() + cfg.interval_ms / 1000.0
            budget = IdleBudget(10**9, deadline)
        on_idle(state, budget)
        if not deterministic and pace:
            remaining = budget.wall_deadline - time.monotonic()
            if remaining > 0:
                time.sleep(remaining)
    if state is None:
        raise ValueError("stream produced no windows")
    return state, finalize(state)
