"""Communication graph and averaging-consensus primitives.

Mixing weights follow the Metropolis-Hastings rule

    w_ij = 1 / (1 + max(deg_i, deg_j))   for each edge {i, j}
    w_ii = 1 - sum_j w_ij

which yields a symmetric doubly stochastic matrix on any connected graph, so
repeated mixing drives every node to the average of the initial values while
conserving their sum at every step.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


class GraphError(ValueError):
    pass


@dataclass
class CommGraph:
    node_ids: tuple[int, ...]            # sorted, stable node order
    edges: tuple[tuple[int, int], ...]
    weights: np.ndarray                  # (n, n) Metropolis matrix

    def __eq__(self, other):
        if not isinstance(other, CommGraph):
            return NotImplemented
        return (self.node_ids == other.node_ids and self.edges == other.edges
                and np.array_equal(self.weights, other.weights))

    @property
    def n_nodes(self) -> int:
        return len(self.node_ids)

    def index_of(self, node_id: int) -> int:
        return self.node_ids.index(node_id)

    def neighbors(self, node_id: int) -> tuple[int, ...]:
        out = []
        for a, b in self.edges:
            if a == node_id:
                out.append(b)
            elif b == node_id:
                out.append(a)
        return tuple(sorted(out))


@dataclass
class ConsensusState:
    values: np.ndarray    # (n,) or (n, T): one row per node
    iteration: int = 0


def _normalize_edges(edges, node_ids) -> tuple[tuple[int, int], ...]:
    seen = set()
    out = []
    idset = set(node_ids)
    for a, b in edges:
        a, b = int(a), int(b)
        if a == b:
            raise GraphError(f"self-loop on node {a}")
        if a not in idset or b not in idset:
            raise GraphError(f"edge ({a}, {b}) references an unknown node")
        key = (min(a, b), max(a, b))
        if key in seen:
            continue
        seen.add(key)
        out.append(key)
    return tuple(sorted(out))


def is_connected(node_ids, edges) -> bool:
    ids = list(node_ids)
    if not ids:
        return False
    adj = {i: set() for i in ids}
    for a, b in edges:
        adj[a].add(b)
        adj[b].add(a)
    seen = {ids[0]}
    stack = [ids[0]]
    while stack:
        for nxt in adj[stack.pop()]:
            if nxt not in seen:
                seen.add(nxt)
                stack.append(nxt)
    return len(seen) == len(ids)


def metropolis_weights(node_ids, edges) -> CommGraph:
    """Build a CommGraph with Metropolis mixing weights.

    Raises GraphError when the graph is disconnected or an edge is malformed;
    a disconnected graph can never reach agreement on a common average.
    """
    node_ids = tuple(sorted(int(i) for i in node_ids))
    if len(set(node_ids)) != len(node_ids):
        raise GraphError("duplicate node ids")
    edges = _normalize_edges(edges, node_ids)
    if not is_connected(node_ids, edges):
        raise GraphError("communication graph is not connected")
    n = len(node_ids)
    pos = {v: k for k, v in enumerate(node_ids)}
    deg = np.zeros(n)
    for a, b in edges:
        deg[pos[a]] += 1
        deg[pos[b]] += 1
    w = np.zeros((n, n))
    for a, b in edges:
        i, j = pos[a], pos[b]
        w[i, j] = w[j, i] = 1.0 / (1.0 + max(deg[i], deg[j]))
    np.fill_diagonal(w, 1.0 - w.sum(axis=1))
    return CommGraph(node_ids, edges, w)


def consensus_round(state: ConsensusState, graph: CommGraph) -> ConsensusState:
    """One synchronous mixing step x_i += sum_j w_ij (x_j - x_i)."""
    return ConsensusState(graph.weights @ state.values, state.iteration + 1)


def run_consensus(initial, graph: CommGraph, tol: float = 1e-9,
                  max_iters: int = 100_000) -> ConsensusState:
    """Mix until every node is within tol of the average of the initial values.

    The returned state reports how many rounds were used; hitting max_iters
    without agreement raises GraphError since on a connected graph the
    iteration provably contracts.
    """
    values = np.array(initial, dtype=float)
    target = values.mean(axis=0)
    state = ConsensusState(values)
    while np.abs(state.values - target).max() > tol:
        if state.iteration >= max_iters:
            raise GraphError(f"consensus not within {tol} after {max_iters} rounds")
        state = consensus_round(state, graph)
    return state
