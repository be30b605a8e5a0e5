"""
Tests for communication graphs and switching schedules
"""

import itertools
import math

import numpy as np
import pytest

from tests.conftest import random_reachable_graph
from app.core.errors import ConnectivityError, TopologyError
from app.core.topology import (
    SwitchingSchedule,
    WeightedDigraph,
    algebraic_connectivity,
    consensus_weights,
    h_matrix,
    has_spanning_tree,
    laplacian,
    min_real_eig_h,
    reachable_from_leader,
    union_graph,
    verify_jointly_connected,
)


@pytest.fixture
def harmonic_graph():
    return WeightedDigraph.from_edges(4, [(0, 1, 1.0), (1, 2, 1.3), (1, 3, 1.6), (3, 4, 2.6)])


@pytest.fixture
def alternating():
    """Leader reaches 1 on even seconds, 1 reaches 2 on odd seconds"""
    g0 = WeightedDigraph.from_edges(2, [(0, 1, 1.0)])
    g1 = WeightedDigraph.from_edges(2, [(1, 2, 1.0)])
    return SwitchingSchedule((g0, g1), (0.0, 1.0), (0, 1), dwell=1.0, period=2.0)


class TestWeightedDigraph:

    def test_adjacency_orientation(self):
        G = WeightedDigraph.from_edges(2, [(0, 1, 2.0), (1, 2, 3.0)])
        assert G.adjacency[1, 0] == 2.0
        assert G.adjacency[2, 1] == 3.0
        assert G.adjacency[1, 2] == 0.0

    def test_undirected_stores_both_directions(self):
        G = WeightedDigraph.from_edges(2, [(0, 1, 1.0), (1, 2, 4.0)], undirected=True)
        assert G.adjacency[2, 1] == G.adjacency[1, 2] == 4.0
        # the leader never receives
        assert G.adjacency[0, 1] == 0.0
        assert G.is_symmetric()

    def test_undirected_leader_edge_points_away(self):
        G = WeightedDigraph.from_edges(1, [(1, 0, 1.0)], undirected=True)
        assert G.leader_weights.tolist() == [1.0]

    def test_edge_into_leader_rejected(self):
        with pytest.raises(TopologyError, match="points into the leader"):
            WeightedDigraph.from_edges(1, [(1, 0, 1.0)])

    @pytest.mark.parametrize("edge", [(1, 1, 1.0), (0, 5, 1.0), (0, 1, -1.0), (0, 1, 0.0)])
    def test_invalid_edges_rejected(self, edge):
        with pytest.raises(TopologyError):
            WeightedDigraph.from_edges(2, [edge])

    def test_edges_lists_undirected_pairs_once(self):
        G = WeightedDigraph.from_edges(2, [(0, 1, 1.0), (1, 2, 1.0)], undirected=True)
        assert G.edges() == [(0, 1, 1.0), (1, 2, 1.0)]


class TestHMatrix:

    def test_laplacian_rows_sum_to_zero(self, harmonic_graph):
        np.testing.assert_allclose(laplacian(harmonic_graph).sum(axis=1), 0.0)

    def test_chain_h_matrix(self, harmonic_graph):
        H = h_matrix(harmonic_graph).matrix
        expected = np.array([
            [1.0, 0.0, 0.0, 0.0],
            [-1.3, 1.3, 0.0, 0.0],
            [-1.6, 0.0, 1.6, 0.0],
            [0.0, 0.0, -2.6, 2.6],
        ])
        np.testing.assert_allclose(H, expected)
        assert min_real_eig_h(H) == pytest.approx(1.0)

    def test_unreached_follower_makes_h_singular(self):
        G = WeightedDigraph.from_edges(2, [(0, 1, 1.0)])
        assert not reachable_from_leader(G)
        with pytest.raises(ConnectivityError):
            min_real_eig_h(h_matrix(G))

    def test_union_sums_weights(self):
        a = WeightedDigraph.from_edges(1, [(0, 1, 1.0)])
        b = WeightedDigraph.from_edges(1, [(0, 1, 2.5)])
        assert union_graph([a, b]).adjacency[1, 0] == 3.5

    def test_union_ignores_order(self):
        rng = np.random.default_rng(11)
        graphs = [random_reachable_graph(rng, 4, density=0.2) for _ in range(3)]
        reference = union_graph(graphs).adjacency
        for order in itertools.permutations(graphs):
            np.testing.assert_allclose(union_graph(list(order)).adjacency, reference, rtol=1e-15)

    def test_random_reachable_graphs_give_positive_spectrum(self):
        rng = np.random.default_rng(2024)
        for _ in range(200):
            G = random_reachable_graph(rng, int(rng.integers(1, 9)), density=float(rng.uniform(0.0, 0.5)))
            assert reachable_from_leader(G)
            assert min_real_eig_h(h_matrix(G)) > 0

    def test_union_of_nothing_rejected(self):
        with pytest.raises(TopologyError):
            union_graph([])


class TestFollowerGraph:

    def test_spanning_tree(self):
        G = WeightedDigraph.from_edges(3, [(1, 2, 1.0), (1, 3, 1.0)])
        assert has_spanning_tree(G)
        H = WeightedDigraph.from_edges(3, [(1, 2, 1.0)])
        assert not has_spanning_tree(H)

    def test_consensus_weights_sit_on_the_root(self):
        G = WeightedDigraph.from_edges(2, [(1, 2, 1.0)])
        np.testing.assert_allclose(consensus_weights(G), [1.0, 0.0], atol=1e-12)

    def test_consensus_weights_uniform_on_undirected_path(self):
        G = WeightedDigraph.from_edges(3, [(1, 2, 1.0), (2, 3, 1.0)], undirected=True)
        np.testing.assert_allclose(consensus_weights(G), np.full(3, 1 / 3), atol=1e-10)

    def test_consensus_weights_need_spanning_tree(self):
        G = WeightedDigraph.from_edges(3, [(1, 2, 1.0)])
        with pytest.raises(ConnectivityError):
            consensus_weights(G)

    def test_path_algebraic_connectivity(self):
        G = WeightedDigraph.from_edges(4, [(1, 2, 1.0), (2, 3, 1.0), (3, 4, 1.0)], undirected=True)
        assert algebraic_connectivity(G) == pytest.approx(2 - math.sqrt(2), rel=1e-9)


class TestSwitchingSchedule:

    def test_index_at_wraps_period(self, alternating):
        assert alternating.index_at(0.0) == 0
        assert alternating.index_at(1.0) == 1
        assert alternating.index_at(2.5) == 0
        assert alternating.index_at(3.999) == 1

    def test_negative_time_rejected(self, alternating):
        with pytest.raises(ValueError):
            alternating.index_at(-0.1)

    def test_intervals_alternate(self, alternating):
        assert alternating.intervals(4.0) == [(0.0, 1.0, 0), (1.0, 2.0, 1), (2.0, 3.0, 0), (3.0, 4.0, 1)]
        assert alternating.switch_instants(4.0) == [1.0, 2.0, 3.0]

    def test_intervals_merge_repeated_graph(self):
        g = WeightedDigraph.from_edges(1, [(0, 1, 1.0)])
        sched = SwitchingSchedule((g, g), (0.0, 1.0, 2.0), (0, 0, 1), dwell=1.0)
        assert sched.intervals(5.0) == [(0.0, 2.0, 0), (2.0, 5.0, 1)]

    def test_intervals_merge_across_period_boundary(self):
        g = WeightedDigraph.from_edges(1, [(0, 1, 1.0)])
        sched = SwitchingSchedule((g, g), (0.0, 1.0, 2.0), (0, 1, 0), dwell=1.0, period=3.0)
        assert sched.intervals(6.0) == [(0.0, 1.0, 0), (1.0, 2.0, 1), (2.0, 4.0, 0), (4.0, 5.0, 1), (5.0, 6.0, 0)]

    def test_static(self, harmonic_graph):
        sched = SwitchingSchedule.static(harmonic_graph)
        assert sched.is_static
        assert sched.intervals(10.0) == [(0.0, 10.0, 0)]

    def test_dwell_violation(self, harmonic_graph):
        with pytest.raises(TopologyError, match="dwell"):
            SwitchingSchedule((harmonic_graph, harmonic_graph), (0.0, 0.2), (0, 1), dwell=0.5)

    def test_must_start_at_zero(self, harmonic_graph):
        with pytest.raises(TopologyError):
            SwitchingSchedule((harmonic_graph,), (1.0,), (0,), dwell=1.0)

    def test_bad_active_index(self, harmonic_graph):
        with pytest.raises(TopologyError, match="out of range"):
            SwitchingSchedule((harmonic_graph,), (0.0,), (3,), dwell=1.0)


class TestJointConnectivity:

    def test_certified_over_full_period(self, alternating):
        verdict = verify_jointly_connected(alternating, window=2.0, horizon=10.0)
        assert verdict.certified
        assert len(verdict.windows) == 5
        assert verdict.failing_window is None

    def test_short_window_fails_first(self, alternating):
        verdict = verify_jointly_connected(alternating, window=1.0, horizon=10.0)
        assert not verdict.certified
        assert verdict.failing_window == (0.0, 1.0)
        assert verdict.to_dict()["failing_window"] == [0.0, 1.0]

    def test_window_must_be_positive(self, alternating):
        with pytest.raises(TopologyError):
            verify_jointly_connected(alternating, window=0.0)

    def test_shipped_cycle_is_certified(self, load):
        sc = load("jointly_connected_cycle")
        assert verify_jointly_connected(sc.topology, window=2.0, horizon=sc.horizon).certified
