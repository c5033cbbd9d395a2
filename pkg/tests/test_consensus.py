import math
from dataclasses import replace

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from numpy.polynomial import chebyshev

from malinucb.consensus import (
    MAX_ROUNDS,
    comm_length,
    comm_length_eps,
    consensus_average,
    consensus_matrix,
    lemma1_matrix_bound,
    mix_round,
    start_mix,
)
from malinucb.topology import make_topology, topology_from_matrix

SMALL_TOPOLOGIES = {
    "cycle6": lambda: make_topology("cycle", 6),
    "cycle10": lambda: make_topology("cycle", 10),
    "reg4_12": lambda: make_topology("k_regular", 12, k=4),
    "path7": lambda: make_topology("path", 7),
    "path3": lambda: make_topology("path", 3),
    "two_node": lambda: topology_from_matrix([[0.9, 0.1], [0.1, 0.9]]),
}


def chebyshev_filter(topology, q):
    """T_q(W/l2) / T_q(1/l2) through an eigendecomposition of W."""
    evals, Q = np.linalg.eigh(topology.W)
    coef = np.zeros(q + 1)
    coef[q] = 1.0
    lam = topology.lambda2
    gains = chebyshev.chebval(evals / lam, coef) / chebyshev.chebval(1.0 / lam, coef)
    return (Q * gains) @ Q.T


def hop_distances(adj, source):
    n = adj.shape[0]
    dist = np.full(n, -1)
    dist[source] = 0
    frontier = [source]
    while frontier:
        nxt = []
        for u in frontier:
            for v in np.flatnonzero(adj[u]):
                if dist[v] < 0:
                    dist[v] = dist[u] + 1
                    nxt.append(v)
        frontier = nxt
    return dist


class TestCommLength:
    def test_two_agents(self):
        assert comm_length(1, 2, 0.5) == 2

    def test_fifty_agents(self):
        assert comm_length(1, 50, 0.9) == 11

    @pytest.mark.parametrize("n", [1, 4, 64])
    def test_exact_averaging(self, n):
        assert comm_length(1, n, 0.0) == 1
        assert comm_length(1000, n, 1e-13) == 1

    def test_rejects_periodic(self):
        with pytest.raises(ValueError, match="disconnected or periodic"):
            comm_length(1, 4, 1.0)

    def test_epsilon_form_matches_episode_form(self):
        for s in (1, 2, 7, 100):
            assert comm_length(s, 10, 0.8) == comm_length_eps(1.0 / s, 10, 0.8)

    @settings(max_examples=100, deadline=None)
    @given(st.integers(1, 50), st.floats(1e-6, 0.999), st.integers(1, 10_000))
    def test_positive_and_non_decreasing(self, n, lam, s):
        q = comm_length(s, n, lam)
        assert 1 <= q <= MAX_ROUNDS
        assert comm_length(s + 1, n, lam) >= q


class TestMixRound:
    def test_exact_projector_one_step(self):
        topo = make_topology("complete", 2)
        state = mix_round(start_mix(np.array([1.0, 3.0]), topo.lambda2), topo.W)
        np.testing.assert_allclose(state.y_curr, [2.0, 2.0])

    def test_first_round_is_plain_gossip(self):
        topo = make_topology("cycle", 4)
        state = mix_round(start_mix(np.array([1.0, 0, 0, 0]), topo.lambda2), topo.W)
        np.testing.assert_allclose(state.y_curr, [1 / 3, 1 / 3, 0, 1 / 3], atol=1e-15)

    @pytest.mark.parametrize("name", sorted(SMALL_TOPOLOGIES))
    def test_constant_vector_is_fixed(self, name):
        topo = SMALL_TOPOLOGIES[name]()
        state = start_mix(np.full(topo.n, 2.5), topo.lambda2)
        for _ in range(25):
            state = mix_round(state, topo.W)
            np.testing.assert_allclose(state.y_curr, 2.5, atol=1e-10)


class TestConsensusAverage:
    def test_complete_exact(self):
        topo = make_topology("complete", 4)
        np.testing.assert_allclose(consensus_average(np.array([4.0, 0, 0, 0]), topo, 1), 1.0)

    def test_rejects_zero_rounds(self):
        with pytest.raises(ValueError):
            consensus_average(np.ones(3), make_topology("path", 3), 0)

    def test_cycle_ten_accuracy(self):
        topo = make_topology("cycle", 10)
        q = math.ceil(math.log(200) / math.sqrt(2 * math.log(1 / topo.lambda2)))
        P = chebyshev_filter(topo, q)
        assert np.linalg.norm(P - np.full((10, 10), 0.1), 2) <= 0.01
        np.testing.assert_allclose(consensus_matrix(topo, q), P, atol=1e-10)

    def test_trace(self):
        topo = make_topology("cycle", 6)
        y, trace = consensus_average(np.arange(6.0), topo, 4, trace=True)
        assert len(trace) == 4
        np.testing.assert_array_equal(trace[-1], y)

    @pytest.mark.parametrize("name", sorted(SMALL_TOPOLOGIES))
    def test_normaliser_property(self, name):
        topo = SMALL_TOPOLOGIES[name]()
        for q in range(1, 31):
            np.testing.assert_allclose(consensus_matrix(topo, q) @ np.ones(topo.n), 1.0, atol=1e-10)

    @pytest.mark.parametrize("name", sorted(SMALL_TOPOLOGIES))
    def test_monotone_accuracy(self, name):
        topo = SMALL_TOPOLOGIES[name]()
        J = np.full((topo.n, topo.n), 1.0 / topo.n)
        norms = [np.linalg.norm(consensus_matrix(topo, q) - J, 2) for q in range(1, 31)]
        assert all(b <= a + 1e-12 for a, b in zip(norms, norms[1:]))

    @pytest.mark.parametrize("name", sorted(SMALL_TOPOLOGIES))
    def test_recurrence_matches_eigen_oracle(self, name):
        topo = SMALL_TOPOLOGIES[name]()
        rng = np.random.default_rng(7)
        R = rng.standard_normal((topo.n, 10))
        for q in range(1, 21):
            np.testing.assert_allclose(consensus_average(R, topo, q), chebyshev_filter(topo, q) @ R,
                                       atol=1e-8, rtol=0)

    def test_non_edge_weight_irrelevant(self):
        topo = make_topology("k_regular", 12, k=4)
        W = topo.W.copy()
        W[topo.W == 0] = 0.0  # explicit zeroing of every non-edge
        r = np.random.default_rng(3).standard_normal(12)
        out = consensus_average(r, topo, 6)
        np.testing.assert_array_equal(consensus_average(r, replace(topo, W=W), 6), out)

    @pytest.mark.parametrize("name", ["cycle10", "path7", "reg4_12"])
    def test_locality_radius(self, name):
        topo = SMALL_TOPOLOGIES[name]()
        rng = np.random.default_rng(11)
        r = rng.standard_normal(topo.n)
        for q in range(1, 5):
            base = consensus_average(r, topo, q)
            dist = hop_distances(topo.adjacency.edges, 0)
            far = np.flatnonzero(dist > q)
            if len(far) == 0:
                continue
            bumped = r.copy()
            bumped[far] += 10.0
            assert consensus_average(bumped, topo, q)[0] == pytest.approx(base[0], abs=1e-12)


class TestLemma1:
    def test_complete(self):
        assert lemma1_matrix_bound(make_topology("complete", 8), 0.5) == (1, 0.0)

    def test_cycle_six(self):
        q, norm = lemma1_matrix_bound(make_topology("cycle", 6), 0.2)
        assert norm <= 0.2 / 6
        expected = np.linalg.norm(chebyshev_filter(make_topology("cycle", 6), q) - np.full((6, 6), 1 / 6), 2)
        assert norm == pytest.approx(expected, abs=1e-10)

    def test_two_node(self):
        _, norm = lemma1_matrix_bound(topology_from_matrix([[0.9, 0.1], [0.1, 0.9]]), 0.1)
        assert norm <= 0.05

    @pytest.mark.parametrize("name", sorted(SMALL_TOPOLOGIES))
    @pytest.mark.parametrize("eps", [0.5, 0.1, 0.01])
    def test_bound_holds(self, name, eps):
        topo = SMALL_TOPOLOGIES[name]()
        _, norm = lemma1_matrix_bound(topo, eps)
        assert norm <= eps / topo.n
