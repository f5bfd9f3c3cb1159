import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from mostream.core import (
    ClusteringSolution,
    ClusterSummary,
    ObjectiveVector,
    SolutionOrigin,
    WindowBatch,
)
from mostream.objectives import (
    ParetoArchive,
    crowding_distances,
    dominates,
    default_neighborhood,
    hypervolume,
    hypervolume_in_box,
    separateness,
    update_compactness,
)

from oracles import hypervolume_raster


def _protos(points, sol_id=0, compactness=0.0, sep=0.0):
    clusters = [ClusterSummary(np.asarray(p, dtype=float)) for p in points]
    return ClusteringSolution(ObjectiveVector(compactness, sep), clusters,
                              SolutionOrigin.KMEANS, sol_id)


def _objsol(compactness, sep, sol_id):
    return _protos([(0.0, 0.0)], sol_id=sol_id, compactness=compactness, sep=sep)


def _window(points):
    return WindowBatch(window_id=1, start_index=0,
                       data=np.asarray(points, dtype=float).reshape(-1, 2),
                       labels=None)


class TestCompactness:
    def test_decayed_accumulation(self):
        sol = _protos([(1.0, 0.0)], compactness=10.0)
        win = _window([(0, 0), (2, 0)])
        value = update_compactness(sol, win, np.array([0, 0]), gamma=0.7)
        assert value == pytest.approx(0.7 * 10 + 2)
        assert sol.objectives.compactness == pytest.approx(9.0)

    def test_empty_windows_cannot_be_built(self):
        # the batch type itself forbids the empty-sum boundary case
        with pytest.raises(ValueError):
            WindowBatch(window_id=1, start_index=0,
                        data=np.empty((0, 2)), labels=None)

    def test_points_on_prototypes_contribute_zero(self):
        sol = _protos([(1.0, 0.0), (5.0, 5.0)], compactness=4.0)
        win = _window([(1, 0), (5, 5)])
        assert update_compactness(sol, win, np.array([0, 1]),
                                  gamma=0.7) == pytest.approx(2.8)

    def test_rejects_gamma_out_of_range(self):
        sol = _protos([(0.0, 0.0)])
        win = _window([(1, 1)])
        with pytest.raises(ValueError):
            update_compactness(sol, win, np.array([0]), gamma=0.0)


class TestSeparateness:
    def test_two_prototypes(self):
        assert separateness(_protos([(0, 0), (3, 4)])) == pytest.approx(5.0)

    def test_single_cluster_is_zero(self):
        assert separateness(_protos([(2, 2)])) == 0.0

    def test_collinear_min_then_mean(self):
        clusters = [ClusterSummary(np.array([v])) for v in (0.0, 1.0, 10.0)]
        sol = ClusteringSolution(ObjectiveVector(), clusters,
                                 SolutionOrigin.KMEANS, 0)
        assert separateness(sol) == pytest.approx(11.0 / 3.0)

    def test_neighborhood_is_three_nearest(self):
        sol = _protos([(0, 0), (1, 0), (2, 0), (3, 0), (50, 0)])
        hood = default_neighborhood(sol)
        assert hood[0] == {1, 2, 3}
        assert all(len(v) == 3 for v in hood.values())


class TestDominates:
    def test_better_in_both(self):
        assert dominates(ObjectiveVector(1, 5), ObjectiveVector(2, 3))

    def test_incomparable(self):
        a, b = ObjectiveVector(1, 3), ObjectiveVector(2, 5)
        assert not dominates(a, b)
        assert not dominates(b, a)

    def test_equal_never_dominates(self):
        v = ObjectiveVector(1.5, 2.5)
        assert not dominates(v, ObjectiveVector(1.5, 2.5))

    @given(st.tuples(st.floats(-50, 50), st.floats(-50, 50)),
           st.tuples(st.floats(-50, 50), st.floats(-50, 50)))
    def test_asymmetric(self, p, q):
        a, b = ObjectiveVector(*p), ObjectiveVector(*q)
        assert not (dominates(a, b) and dominates(b, a))

    @given(st.lists(st.tuples(st.floats(-50, 50), st.floats(-50, 50)),
                    min_size=3, max_size=3))
    def test_transitive(self, triple):
        a, b, c = (ObjectiveVector(*t) for t in triple)
        if dominates(a, b) and dominates(b, c):
            assert dominates(a, c)


class TestArchive:
    def test_incomparable_coexist(self):
        # cheaper compactness vs wider separateness: neither dominates
        arc = ParetoArchive()
        assert arc.insert(_objsol(1, 3, 0))
        assert arc.insert(_objsol(2, 5, 1))
        assert len(arc) == 2

    def test_dominating_candidate_replaces(self):
        arc = ParetoArchive()
        arc.insert(_objsol(2, 3, 0))
        assert arc.insert(_objsol(1, 5, 1))
        assert [s.solution_id for s in arc] == [1]

    def test_duplicate_objectives_rejected(self):
        arc = ParetoArchive()
        arc.insert(_objsol(1, 5, 0))
        assert not arc.insert(_objsol(1, 5, 1))
        assert len(arc) == 1

    def test_dominated_candidate_rejected(self):
        arc = ParetoArchive()
        arc.insert(_objsol(1, 5, 0))
        assert not arc.insert(_objsol(2, 4, 1))
        assert len(arc) == 1

    def test_capacity_eviction_keeps_extremes(self):
        # ascending compactness with ascending separateness: incomparable
        arc = ParetoArchive(capacity=3)
        staircase = [(1, 3), (2, 5), (3, 7), (4, 9)]
        for i, (c, s) in enumerate(staircase):
            arc.insert(_objsol(c, s, i))
        assert len(arc) == 3
        pairs = {s.objectives.as_min_pair() for s in arc}
        assert (1.0, -3.0) in pairs
        assert (4.0, -9.0) in pairs

    @given(st.lists(st.tuples(st.integers(0, 8), st.integers(0, 8)),
                    min_size=1, max_size=40))
    def test_invariant_after_any_insert_sequence(self, pairs):
        arc = ParetoArchive(capacity=6)
        for i, (c, s) in enumerate(pairs):
            arc.insert(_objsol(float(c), float(s), i))
        arc.validate()
        assert 1 <= len(arc) <= 6
        seen = [s.objectives.as_min_pair() for s in arc]
        assert len(seen) == len(set(seen))


class TestCrowding:
    def test_extremes_are_infinite(self):
        objs = [ObjectiveVector(1, 9), ObjectiveVector(2, 7),
                ObjectiveVector(3, 5)]
        d = crowding_distances(objs)
        assert d[0] == np.inf and d[2] == np.inf
        assert np.isfinite(d[1])

    def test_two_or_fewer_all_infinite(self):
        assert np.all(np.isinf(crowding_distances([ObjectiveVector(1, 1)])))


class TestHypervolume:
    def test_unit_box_single_point(self):
        arc = ParetoArchive()
        arc.insert(_objsol(1, -1, 0))  # min-form (1, 1)
        assert hypervolume(arc, ObjectiveVector(2, -2)) == pytest.approx(1.0)

    def test_two_point_staircase(self):
        # min-form points (1,3) and (3,1) against reference (4,4); the
        # rasterization oracle pins the area at 5.0
        arc = ParetoArchive()
        arc.insert(_objsol(1, -3, 0))
        arc.insert(_objsol(3, -1, 1))
        ref = ObjectiveVector(4, -4)
        hv = hypervolume(arc, ref)
        assert hv == pytest.approx(5.0)
        assert hv == pytest.approx(
            hypervolume_raster([(1, 3), (3, 1)], (4, 4)), abs=0.01
        )

    def test_empty_archive(self):
        assert hypervolume(ParetoArchive(), ObjectiveVector(1, -1)) == 0.0

    def test_member_outside_box_rejected(self):
        arc = ParetoArchive()
        arc.insert(_objsol(5, -1, 0))
        with pytest.raises(ValueError):
            hypervolume(arc, ObjectiveVector(4, -4))

    def test_in_box_variant_filters(self):
        arc = ParetoArchive()
        arc.insert(_objsol(1, -3, 0))
        arc.insert(_objsol(0.5, -5, 1))  # min-form (0.5, 5): outside, dropped
        ref = ObjectiveVector(4, -4)
        assert len(arc) == 2
        assert hypervolume_in_box(arc, ref) == pytest.approx(3.0)

    @given(st.lists(st.tuples(st.integers(0, 30), st.integers(0, 30)),
                    min_size=1, max_size=25))
    def test_matches_raster_oracle(self, raw):
        arc = ParetoArchive()
        for i, (c, s) in enumerate(raw):
            arc.insert(_objsol(float(c), -float(s), i))  # min-form (c, s)
        ref = ObjectiveVector(40.0, -40.0)
        hv = hypervolume(arc, ref)
        pts = [s.objectives.as_min_pair() for s in arc]
        oracle = hypervolume_raster(pts, (40.0, 40.0), cells=900)
        assert hv == pytest.approx(oracle, rel=0.02, abs=1.0)

    def test_insert_never_decreases_hv_below_capacity(self, rng):
        arc = ParetoArchive(capacity=50)
        ref = ObjectiveVector(100.0, 0.0)
        prev = 0.0
        for i in range(100):
            c = float(rng.uniform(1, 90))
            s = float(rng.uniform(1, 90))
            arc.insert(_objsol(c, s, i))
            cur = hypervolume_in_box(arc, ref)
            assert cur >= prev - 1e-12
            prev = cur
