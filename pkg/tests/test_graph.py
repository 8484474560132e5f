"""
Tests for Tanner graph construction and cleanup.
"""

from unittest.mock import patch

import numpy as np
import pytest

from noisy_ldpc.degree import CODE_A, DegreeDistribution, regular
from noisy_ldpc.graph import (
    GraphConstructionError,
    TannerGraph,
    _apportion,
    construct,
    remove_four_cycles,
    syndrome_ok,
)


def shared_checks(graph: TannerGraph, a: int, b: int) -> int:
    adjacency = graph.var_adjacency()
    return len(set(adjacency[a].tolist()) & set(adjacency[b].tolist()))


class TestConstruct:
    """Configuration-model construction."""

    def test_regular_3_6_small(self):
        graph = construct(regular(3, 6), 12, seed=0)
        assert graph.n_vars == 12
        assert graph.n_checks == 6
        assert np.all(graph.var_degrees == 3)
        assert np.all(graph.check_degrees == 6)
        assert graph.n_edges == 36

    def test_regular_3_6_1008(self):
        graph = construct(regular(3, 6), 1008, seed=3)
        assert graph.n_checks == 504
        assert graph.degree_histogram("variable") == {3: 1008}
        assert graph.degree_histogram("check") == {6: 504}
        assert graph.design_rate == pytest.approx(0.5)

    def test_irregular_edge_counts_match(self):
        graph = construct(CODE_A, 10_000, seed=1)
        assert int(graph.var_degrees.sum()) == int(graph.check_degrees.sum()) == graph.n_edges
        assert graph.design_rate == pytest.approx(0.5, abs=2e-3)
        histogram = graph.degree_histogram("variable")
        assert set(histogram) == {2, 4}

    def test_same_seed_same_graph(self):
        a = construct(regular(3, 6), 96, seed=11)
        b = construct(regular(3, 6), 96, seed=11)
        np.testing.assert_array_equal(a.edge_check, b.edge_check)

    def test_edges_ordered_by_variable(self):
        graph = construct(regular(3, 6), 48, seed=2)
        assert np.all(np.diff(graph.edge_var) >= 0)

    def test_block_length_too_small(self):
        dist = DegreeDistribution(((2, 0.01), (3, 0.99)), ((6, 1.0),))
        with pytest.raises(GraphConstructionError, match="too small"):
            construct(dist, 4)

    def test_non_positive_length(self):
        with pytest.raises(ValueError):
            construct(regular(3, 6), 0)

    def test_apportion_largest_remainder(self):
        counts = _apportion(10, {2: 0.25, 3: 0.25, 4: 0.5})
        assert sum(counts.values()) == 10
        assert counts[4] == 5


class TestGraphQueries:
    def test_parity_check_matrix(self):
        graph = TannerGraph(3, 2, np.array([0, 1, 1, 2]), np.array([0, 0, 1, 1]))
        dense = graph.parity_check_matrix().toarray()
        np.testing.assert_array_equal(dense, [[1, 1, 0], [0, 1, 1]])

    def test_four_cycle_count(self):
        # Variables 0 and 1 both touch checks 0 and 1.
        graph = TannerGraph(2, 2, np.array([0, 0, 1, 1]), np.array([0, 1, 0, 1]))
        assert graph.four_cycle_count() == 1
        assert graph.multi_edge_count() == 0

    def test_multi_edge_count(self):
        graph = TannerGraph(2, 1, np.array([0, 0, 1]), np.array([0, 0, 0]))
        assert graph.multi_edge_count() == 1

    def test_out_of_range_index(self):
        with pytest.raises(ValueError, match="out-of-range"):
            TannerGraph(2, 1, np.array([0, 2]), np.array([0, 0]))

    def test_edges_are_read_only(self):
        graph = construct(regular(3, 6), 12)
        with pytest.raises(ValueError):
            graph.edge_check[0] = 1


class TestRemoveFourCycles:
    """Edge-swap cleanup."""

    def test_breaks_single_cycle(self):
        edge_var = np.array([0, 0, 1, 1, 2, 2, 3, 3])
        edge_check = np.array([0, 1, 0, 1, 2, 3, 4, 5])
        graph = TannerGraph(4, 6, edge_var, edge_check)
        assert graph.four_cycle_count() == 1

        result = remove_four_cycles(graph, seed=0)
        assert result.clean
        assert result.swaps >= 1
        assert shared_checks(result.graph, 0, 1) <= 1
        np.testing.assert_array_equal(result.graph.var_degrees, graph.var_degrees)
        np.testing.assert_array_equal(result.graph.check_degrees, graph.check_degrees)

    def test_clean_graph_unchanged(self):
        graph = TannerGraph(3, 2, np.array([0, 1, 1, 2]), np.array([0, 0, 1, 1]))
        result = remove_four_cycles(graph)
        assert result.swaps == 0
        assert result.passes == 0
        np.testing.assert_array_equal(result.graph.edge_check, graph.edge_check)

    def test_regular_1008_becomes_clean(self):
        graph = construct(regular(3, 6), 1008, seed=5)
        result = remove_four_cycles(graph, seed=5)
        assert result.residual_cycles == 0
        assert result.residual_multi_edges == 0
        assert result.graph.degree_histogram("variable") == {3: 1008}
        assert result.graph.degree_histogram("check") == {6: 504}

    def test_impossible_graph_logs_warning(self):
        # Every variable touches both checks; no swap can help.
        edge_var = np.array([0, 0, 1, 1, 2, 2])
        edge_check = np.array([0, 1, 0, 1, 0, 1])
        graph = TannerGraph(3, 2, edge_var, edge_check)

        with patch("noisy_ldpc.graph.logger") as mock_logger:
            result = remove_four_cycles(graph, max_passes=3, max_attempts=5)

        assert not result.clean
        assert result.residual_cycles == 3
        mock_logger.warning.assert_called_once()
        assert "remaining" in str(mock_logger.warning.call_args)


class TestSyndrome:
    def test_all_zero_word(self):
        graph = construct(regular(3, 6), 24)
        assert syndrome_ok(graph, np.zeros(24, dtype=np.int8))

    def test_single_flip_fails(self):
        graph = TannerGraph(3, 2, np.array([0, 1, 1, 2]), np.array([0, 0, 1, 1]))
        bits = np.array([1, 0, 0])
        assert not syndrome_ok(graph, bits)
        assert syndrome_ok(graph, np.array([1, 1, 1]))

    def test_length_mismatch(self):
        graph = construct(regular(3, 6), 12)
        with pytest.raises(ValueError, match="hard bits"):
            syndrome_ok(graph, np.zeros(11))
