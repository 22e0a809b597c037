import numpy as np
import pytest

from coopgrid.graph import (
    CommGraph,
    ConsensusState,
    GraphError,
    consensus_round,
    is_connected,
    metropolis_weights,
    run_consensus,
)


def random_connected_graph(rng, n):
    ids = list(range(1, n + 1))
    edges = [(ids[rng.integers(0, k)], ids[k]) for k in range(1, n)]   # random tree
    for _ in range(int(rng.integers(0, n))):
        a, b = rng.choice(ids, size=2, replace=False)
        edges.append((int(a), int(b)))
    return ids, edges


def test_path_graph_weights_exact():
    g = metropolis_weights([1, 2, 3], [(1, 2), (2, 3)])
    expected = np.array([
        [2 / 3, 1 / 3, 0.0],
        [1 / 3, 1 / 3, 1 / 3],
        [0.0, 1 / 3, 2 / 3],
    ])
    assert np.allclose(g.weights, expected, atol=1e-15)


def test_weights_doubly_stochastic_on_random_graphs():
    rng = np.random.default_rng(3)
    for _ in range(50):
        ids, edges = random_connected_graph(rng, int(rng.integers(2, 12)))
        g = metropolis_weights(ids, edges)
        w = g.weights
        assert np.allclose(w, w.T, atol=1e-15)
        assert np.allclose(w.sum(axis=1), 1.0, atol=1e-14)
        assert np.all(w >= -1e-15)


def test_graph_rejects_bad_inputs():
    with pytest.raises(GraphError):
        metropolis_weights([1, 2, 3], [(1, 2)])          # node 3 unreachable
    with pytest.raises(GraphError):
        metropolis_weights([1, 2], [(1, 1), (1, 2)])     # self-loop
    with pytest.raises(GraphError):
        metropolis_weights([1, 2], [(1, 3)])             # unknown endpoint
    with pytest.raises(GraphError):
        metropolis_weights([1, 1, 2], [(1, 2)])          # duplicate id


def test_duplicate_and_reversed_edges_collapse():
    g = metropolis_weights([1, 2], [(1, 2), (2, 1), (1, 2)])
    assert g.edges == ((1, 2),)
    assert g.neighbors(1) == (2,)


def test_is_connected():
    assert is_connected([1, 2, 3], [(1, 2), (2, 3)])
    assert not is_connected([1, 2, 3], [(1, 2)])


def test_consensus_round_conserves_mass_and_contracts():
    rng = np.random.default_rng(5)
    for _ in range(30):
        ids, edges = random_connected_graph(rng, int(rng.integers(2, 10)))
        g = metropolis_weights(ids, edges)
        state = ConsensusState(rng.uniform(-50.0, 50.0, len(ids)))
        total = state.values.sum()
        spread = state.values.max() - state.values.min()
        for _ in range(20):
            state = consensus_round(state, g)
            assert abs(state.values.sum() - total) <= 1e-12 * max(1.0, abs(total))
            new_spread = state.values.max() - state.values.min()
            assert new_spread <= spread + 1e-12
            spread = new_spread
        assert state.iteration == 20


def test_consensus_round_handles_vector_values():
    g = metropolis_weights([1, 2, 3], [(1, 2), (2, 3)])
    vals = np.array([[1.0, 10.0], [2.0, 20.0], [3.0, 30.0]])
    state = consensus_round(ConsensusState(vals), g)
    assert state.values.shape == (3, 2)
    assert np.allclose(state.values.sum(axis=0), [6.0, 60.0], atol=1e-12)


def test_run_consensus_reaches_average():
    rng = np.random.default_rng(9)
    for _ in range(20):
        ids, edges = random_connected_graph(rng, int(rng.integers(2, 8)))
        g = metropolis_weights(ids, edges)
        x0 = rng.uniform(-10.0, 10.0, len(ids))
        out = run_consensus(x0, g, tol=1e-9)
        assert np.abs(out.values - x0.mean()).max() <= 1e-9


def test_run_consensus_complete_graph_is_one_round():
    # K4 Metropolis weights equal 1/4 everywhere: exact average in one mix
    edges = [(a, b) for a in range(1, 5) for b in range(a + 1, 5)]
    g = metropolis_weights(range(1, 5), edges)
    out = run_consensus([4.0, 0.0, -2.0, 6.0], g, tol=1e-12)
    assert out.iteration <= 1
    assert np.allclose(out.values, 2.0, atol=1e-12)


def test_run_consensus_ring_and_star_round_counts():
    ring = metropolis_weights(range(1, 5), [(1, 2), (2, 3), (3, 4), (1, 4)])
    star = metropolis_weights(range(1, 5), [(1, 2), (1, 3), (1, 4)])
    x0 = [10.0, -4.0, 3.0, 7.0]
    for g in (ring, star):
        out = run_consensus(x0, g, tol=1e-9)
        assert 0 < out.iteration <= 200
        assert np.abs(out.values - 4.0).max() <= 1e-9


def test_run_consensus_single_node_trivial():
    g = CommGraph((1,), (), np.array([[1.0]]))
    out = run_consensus([5.0], g, tol=1e-12)
    assert out.iteration == 0
    assert out.values[0] == 5.0
