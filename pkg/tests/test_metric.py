import numpy as np
import pytest

from pquotient import (
    DuplicatePointsError,
    MalformedInputError,
    MetricSpace,
    Partition,
    PreconditionError,
    ball,
    epsilon_components,
    subset_distance,
    validate_metric,
)
from pquotient.metric import delta_graph, is_connected, merge_duplicates, point_set_distance


def checks(report):
    return {v.check for v in report.violations}


class TestValidateMetric:
    def test_three_points_on_a_line_is_clean(self):
        D = np.array([[0, 1, 2], [1, 0, 1], [2, 1, 0]], dtype=float)
        rep = validate_metric(D, check_triangle=True)
        assert rep.ok
        assert rep.violations == []
        assert set(rep.counts) == {"diagonal", "symmetry", "nonnegativity", "identity", "triangle"}

    def test_asymmetric_entry_cited(self):
        D = np.array([[0, 1, 1], [2, 0, 1], [1, 1, 0]], dtype=float)
        rep = validate_metric(D)
        assert not rep.ok
        (v,) = rep.violations
        assert v.check == "symmetry"
        assert v.indices == (0, 1)
        assert (v.lhs, v.rhs) == (1.0, 2.0)

    def test_triangle_violation_cited(self):
        D = np.array([[0, 1, 5], [1, 0, 1], [5, 1, 0]], dtype=float)
        assert validate_metric(D).ok  # triangle not checked unless asked
        rep = validate_metric(D, check_triangle=True)
        assert checks(rep) == {"triangle"}
        assert (0, 1, 2) in {v.indices for v in rep.violations}
        v = next(v for v in rep.violations if v.indices == (0, 1, 2))
        assert v.lhs == 5.0 and v.rhs == 2.0

    def test_triangle_tolerance_is_relative(self):
        D = np.array([[0, 1, 2 + 1e-12], [1, 0, 1], [2 + 1e-12, 1, 0]])
        assert validate_metric(D, check_triangle=True).ok

    def test_diagonal_negative_and_identity(self):
        D = np.array([[1, -1, 0], [-1, 0, 2], [0, 2, 0]], dtype=float)
        rep = validate_metric(D)
        assert checks(rep) == {"diagonal", "nonnegativity", "identity"}
        assert rep.counts["nonnegativity"] == 2

    def test_violation_list_is_capped_but_counted(self):
        n = 30
        D = np.ones((n, n))
        np.fill_diagonal(D, 0)
        D[np.triu_indices(n, 1)] = 2.0
        rep = validate_metric(D)
        assert rep.counts["symmetry"] == n * (n - 1) // 2
        assert len(rep.violations) == 100

    @pytest.mark.parametrize("bad", [np.zeros((2, 3)), np.array([[0, np.nan], [np.nan, 0]]), np.zeros((0, 0))])
    def test_malformed_matrices_raise(self, bad):
        with pytest.raises(MalformedInputError):
            validate_metric(bad)


class TestMetricSpace:
    def test_from_points_is_euclidean(self):
        s = MetricSpace.from_points([[0, 0], [3, 4]])
        assert s.dist[0, 1] == 5.0
        assert s.triangle

    def test_distance_matrix_is_read_only(self, line):
        with pytest.raises(ValueError):
            line.dist[0, 1] = 3.0

    def test_duplicate_points_rejected_with_groups(self):
        with pytest.raises(DuplicatePointsError) as exc:
            MetricSpace.from_points([[0, 0], [1, 1], [0, 0]])
        assert exc.value.groups == [[0, 2]]
        assert "merge_duplicates" in str(exc.value)

    def test_merge_duplicates_keeps_first(self):
        X, index_map = merge_duplicates([[0, 0], [1, 1], [0, 0]])
        assert X.tolist() == [[0, 0], [1, 1]]
        assert index_map.tolist() == [0, 1, 0]

    def test_subspace_and_scaled(self, line):
        sub = line.subspace([0, 3])
        assert sub.dist[0, 1] == 10.0
        assert line.scaled(2.0).dist[0, 3] == 20.0

    def test_nearest_neighbor_distances(self, line):
        assert line.nearest_neighbor_distances.tolist() == [1, 1, 1, 1]


class TestPartition:
    def test_labels_are_canonicalized(self):
        p = Partition.from_labels([5, 5, 2, 7])
        assert p.class_of.tolist() == [0, 0, 1, 2]
        assert [m.tolist() for m in p.class_members] == [[0, 1], [2], [3]]

    def test_gap_in_labels_rejected(self):
        with pytest.raises(MalformedInputError):
            Partition(np.array([0, 2]))

    def test_from_classes_requires_cover(self):
        with pytest.raises(MalformedInputError):
            Partition.from_classes([[0], [2]], 3)
        with pytest.raises(MalformedInputError):
            Partition.from_classes([[0, 1], [1, 2]], 3)

    def test_refines(self):
        fine = Partition.singletons(4)
        assert fine.refines(Partition.whole(4))
        assert not Partition.whole(4).refines(fine)


class TestSubsetDistance:
    def test_singletons_reduce_to_d(self, line):
        assert subset_distance(line, [0], [3]) == line.dist[0, 3]

    def test_shared_point_gives_zero(self, line):
        assert subset_distance(line, [1, 2], [1, 2]) == 0.0

    def test_line_example(self, line):
        # X = {point at 1, point at 9}, Y = {point at 10}
        assert subset_distance(line, [1, 2], [3]) == 1.0

    def test_empty_subset_is_an_error(self, line):
        with pytest.raises(PreconditionError):
            subset_distance(line, [], [1])

    def test_point_set_distance(self, line):
        assert point_set_distance(line, [1, 2]).tolist() == [1, 0, 0, 1]
        assert np.isinf(point_set_distance(line, [])).all()


class TestEpsilonComponents:
    def test_line_at_one(self, line):
        comps = epsilon_components(line, [0, 1, 2, 3], 1.0)
        assert [c.tolist() for c in comps] == [[0, 1], [2, 3]]

    def test_large_delta_gives_one_class(self, line):
        assert len(epsilon_components(line, range(4), line.diameter)) == 1

    def test_tiny_delta_gives_singletons(self, line):
        assert len(epsilon_components(line, range(4), 0.5)) == 4

    def test_restricted_to_subset(self, line):
        comps = epsilon_components(line, [3, 0], 5.0)
        assert [c.tolist() for c in comps] == [[0], [3]]

    def test_connectivity_helpers(self, line):
        assert not is_connected(line, 1.0)
        assert is_connected(line, 8.0)
        A = delta_graph(line, 1.0)
        assert A.nnz == 4 and A.diagonal().sum() == 0


class TestBall:
    def test_large_radius_is_everything(self, line):
        assert ball(line, 0, 100.0).tolist() == [0, 1, 2, 3]

    def test_small_open_ball_is_centre(self, line):
        assert ball(line, 0, 0.5).tolist() == [0]

    def test_line_example(self, line):
        assert ball(line, 0, 2.0).tolist() == [0, 1]

    def test_closed_includes_boundary(self, line):
        assert ball(line, 0, 1.0).tolist() == [0]
        assert ball(line, 0, 1.0, closed=True).tolist() == [0, 1]
