"""Weighted undirected information-sharing graphs and their Laplacians."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True, eq=False)
class Topology:
    """Undirected weighted graph over a fixed set of agents.

    ``weights[i, j]`` is the coupling weight between agents i and j; zero
    means no edge.  The matrix must be square, symmetric, nonnegative, and
    zero on the diagonal.  Instances are immutable and safe to share.
    """

    n_agents: int
    weights: np.ndarray

    def __post_init__(self):
        if not isinstance(self.n_agents, (int, np.integer)) or self.n_agents < 1:
            raise ValueError("n_agents must be a positive integer")
        w = np.asarray(self.weights, dtype=float)
        if w.shape != (self.n_agents, self.n_agents):
            raise ValueError(
                f"weights must be {self.n_agents}x{self.n_agents}, got shape {w.shape}"
            )
        if not np.array_equal(w, w.T):
            raise ValueError("weights must be symmetric (the graph is undirected)")
        if np.any(np.diagonal(w) != 0.0):
            raise ValueError("weights must have a zero diagonal (no self-loops)")
        if np.any(w < 0.0):
            raise ValueError("weights must be nonnegative")
        w = w.copy()
        w.setflags(write=False)
        object.__setattr__(self, "weights", w)


def topology_from_edges(n_agents: int, edges) -> Topology:
    """Build a Topology from ``(i, j, weight)`` triples with 0-based indices."""
    w = np.zeros((n_agents, n_agents))
    for entry in edges:
        if len(entry) != 3:
            raise ValueError(f"edge {entry!r} must be (i, j, weight)")
        i, j, wt = entry
        if not (0 <= i < n_agents and 0 <= j < n_agents):
            raise ValueError(f"edge ({i}, {j}) out of range for {n_agents} agents")
        if i == j:
            raise ValueError(f"self-loop edge on agent {i} is not allowed")
        if wt <= 0:
            raise ValueError(f"edge ({i}, {j}) weight must be positive, got {wt}")
        if w[i, j] != 0.0:
            raise ValueError(f"duplicate edge ({i}, {j})")
        w[i, j] = wt
        w[j, i] = wt
    return Topology(n_agents=n_agents, weights=w)


def laplacian(topology: Topology) -> np.ndarray:
    """Weighted graph Laplacian: degree matrix minus adjacency.

    Row and column sums are zero; the result is symmetric positive
    semidefinite for any valid Topology.
    """
    w = topology.weights
    return np.diag(w.sum(axis=1)) - w


def is_connected(topology: Topology) -> bool:
    """True iff every agent is reachable from agent 0 over positive-weight edges.

    Computed by breadth-first search; a singleton graph counts as connected.
    """
    n = topology.n_agents
    w = topology.weights
    seen = np.zeros(n, dtype=bool)
    seen[0] = True
    frontier = [0]
    while frontier:
        nxt = []
        for i in frontier:
            for j in np.nonzero(w[i] > 0.0)[0]:
                if not seen[j]:
                    seen[j] = True
                    nxt.append(int(j))
        frontier = nxt
    return bool(seen.all())


def neighbors(topology: Topology, i: int) -> list[int]:
    """Agents sharing a positive-weight edge with agent ``i`` (0-based)."""
    if not 0 <= i < topology.n_agents:
        raise IndexError(
            f"agent index {i} out of range for {topology.n_agents} agents"
        )
    return [int(j) for j in np.nonzero(topology.weights[i] > 0.0)[0]]
