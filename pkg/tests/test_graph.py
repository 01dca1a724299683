import numpy as np
import pytest

from embopt import Topology, is_connected, laplacian, neighbors, topology_from_edges


def four_agent_ring_with_chord():
    edges = [(0, 1, 1.0), (1, 2, 1.0), (2, 3, 1.0), (0, 2, 1.0)]
    return topology_from_edges(4, edges)


def test_laplacian_four_agent_example():
    topology = four_agent_ring_with_chord()
    expected = np.array(
        [
            [2.0, -1.0, -1.0, 0.0],
            [-1.0, 2.0, -1.0, 0.0],
            [-1.0, -1.0, 3.0, -1.0],
            [0.0, 0.0, -1.0, 1.0],
        ]
    )
    np.testing.assert_array_equal(laplacian(topology), expected)


def test_laplacian_edgeless_graph_is_zero():
    topology = Topology(3, np.zeros((3, 3)))
    np.testing.assert_array_equal(laplacian(topology), np.zeros((3, 3)))


def test_laplacian_complete_triangle():
    topology = topology_from_edges(3, [(0, 1, 1.0), (1, 2, 1.0), (0, 2, 1.0)])
    expected = np.array([[2.0, -1.0, -1.0], [-1.0, 2.0, -1.0], [-1.0, -1.0, 2.0]])
    np.testing.assert_array_equal(laplacian(topology), expected)


def test_topology_rejects_malformed_weights():
    asymmetric = np.array([[0.0, 1.0], [0.5, 0.0]])
    with pytest.raises(ValueError, match="symmetric"):
        Topology(2, asymmetric)
    negative = np.array([[0.0, -1.0], [-1.0, 0.0]])
    with pytest.raises(ValueError, match="negative"):
        Topology(2, negative)
    self_loop = np.array([[1.0, 1.0], [1.0, 0.0]])
    with pytest.raises(ValueError, match="diagonal"):
        Topology(2, self_loop)
    with pytest.raises(ValueError, match="2x2"):
        Topology(2, np.zeros((2, 3)))


def test_topology_from_edges_rejects_bad_edges():
    with pytest.raises(ValueError, match="self-loop"):
        topology_from_edges(3, [(1, 1, 1.0)])
    with pytest.raises(ValueError, match="duplicate"):
        topology_from_edges(3, [(0, 1, 1.0), (1, 0, 2.0)])
    with pytest.raises(ValueError, match="positive"):
        topology_from_edges(3, [(0, 1, 0.0)])
    with pytest.raises(ValueError, match="out of range"):
        topology_from_edges(3, [(0, 3, 1.0)])


def test_weights_are_immutable():
    topology = four_agent_ring_with_chord()
    with pytest.raises(ValueError):
        topology.weights[0, 1] = 5.0


def test_is_connected_cases():
    assert is_connected(four_agent_ring_with_chord())
    split = topology_from_edges(4, [(0, 1, 1.0), (2, 3, 1.0)])
    assert not is_connected(split)
    assert is_connected(Topology(1, np.zeros((1, 1))))
    assert not is_connected(Topology(2, np.zeros((2, 2))))


def test_neighbors_example_and_edge_cases():
    topology = four_agent_ring_with_chord()
    assert neighbors(topology, 2) == [0, 1, 3]
    assert neighbors(topology, 3) == [2]
    assert neighbors(Topology(2, np.zeros((2, 2))), 0) == []
    with pytest.raises(IndexError):
        neighbors(topology, 4)
    with pytest.raises(IndexError):
        neighbors(topology, -1)


def test_laplacian_properties_random_graphs():
    rng = np.random.default_rng(20240811)
    for _ in range(50):
        n = int(rng.integers(2, 13))
        mask = rng.random((n, n)) < 0.4
        mask = np.triu(mask, k=1)
        weights = np.zeros((n, n))
        weights[mask] = rng.uniform(0.1, 3.0, size=int(mask.sum()))
        weights = weights + weights.T
        topology = Topology(n, weights)
        lap = laplacian(topology)

        np.testing.assert_allclose(lap.sum(axis=1), np.zeros(n), atol=1e-12)
        np.testing.assert_allclose(lap.sum(axis=0), np.zeros(n), atol=1e-12)
        np.testing.assert_allclose(lap, lap.T, atol=0.0)
        eigs = np.linalg.eigvalsh(lap)
        assert eigs[0] >= -1e-10

        # spectral oracle: connectivity <=> second-smallest eigenvalue > 0
        assert is_connected(topology) == (n == 1 or eigs[1] > 1e-9)
