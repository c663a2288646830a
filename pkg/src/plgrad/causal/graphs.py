"""Random DAGs, the RANDOM baseline, structural Hamming distance and edge-list IO."""

from __future__ import annotations

from dataclasses import dataclass
from math import comb
from pathlib import Path

import networkx as nx
import numpy as np

from .. import rng as rngmod


class CycleError(ValueError):
    pass


def topological_order(adjacency: np.ndarray) -> np.ndarray:
    """Kahn's algorithm, always releasing the lowest-index ready node first."""
    adj = np.asarray(adjacency) != 0
    indeg = adj.sum(0)
    order = []
    ready = sorted(np.flatnonzero(indeg == 0).tolist())
    while ready:
        u = ready.pop(0)
        order.append(u)
        for v in np.flatnonzero(adj[u]):
            indeg[v] -= 1
            if indeg[v] == 0:
                ready.append(int(v))
        ready.sort()
    if len(order) != adj.shape[0]:
        raise CycleError("graph has a directed cycle")
    return np.array(order, dtype=np.int64)


@dataclass(frozen=True)
class Dag:
    """Adjacency ``(k, k)`` with ``adjacency[i, j] = 1`` meaning ``i -> j``."""

    adjacency: np.ndarray

    def __post_init__(self):
        adj = (np.asarray(self.adjacency) != 0).astype(np.int8)
        if adj.ndim != 2 or adj.shape[0] != adj.shape[1]:
            raise ValueError("adjacency must be square")
        topological_order(adj)
        object.__setattr__(self, "adjacency", adj)

    @property
    def k(self) -> int:
        return self.adjacency.shape[0]

    @property
    def n_edges(self) -> int:
        return int(self.adjacency.sum())

    def edges(self) -> list[tuple[int, int]]:
        return [(int(i), int(j)) for i, j in zip(*np.nonzero(self.adjacency))]

    def topological_order(self) -> np.ndarray:
        return topological_order(self.adjacency)

    def degrees(self) -> np.ndarray:
        return self.adjacency.sum(0) + self.adjacency.sum(1)


def _relabel(upper: np.ndarray, perm: np.ndarray) -> np.ndarray:
    adj = np.zeros_like(upper)
    adj[np.ix_(perm, perm)] = upper
    return adj


def gen_er_graph(k: int, expected_edges_multiplier: float, seed: int) -> Dag:
    """Erdos-Renyi DAG with ``m * k`` expected edges, oriented along a random order."""
    if k < 2:
        raise ValueError("k must be >= 2")
    g = rngmod.stream(seed, rngmod.GRAPH)
    p = min(1.0, expected_edges_multiplier * k / comb(k, 2))
    upper = np.triu((g.random((k, k)) < p).astype(np.int8), 1)
    return Dag(_relabel(upper, g.permutation(k)))


def gen_sf_graph(k: int, m: int, seed: int) -> Dag:
    """Barabasi-Albert scale-free DAG with exactly ``m * (k - m)`` edges.

    Edges point from the existing node to the newly attached one; node labels
    are then shuffled so the generation order is not the identity.
    """
    if not 1 <= m < k:
        raise ValueError("need 1 <= m < k")
    g = rngmod.stream(seed, rngmod.GRAPH)
    ba = nx.barabasi_albert_graph(k, m, seed=int(g.integers(2**31 - 1)))
    upper = np.zeros((k, k), dtype=np.int8)
    for u, v in ba.edges():
        upper[min(u, v), max(u, v)] = 1
    return Dag(_relabel(upper, g.permutation(k)))


def gen_graph(kind: str, k: int, m: float, seed: int) -> Dag:
    if kind == "er":
        return gen_er_graph(k, m, seed)
    if kind == "sf":
        return gen_sf_graph(k, int(m), seed)
    raise ValueError(f"unknown graph type {kind!r}")


def random_baseline(k: int, m: float, seed: int) -> Dag:
    """RANDOM baseline: an ER graph with the same expected edge count, ignoring data."""
    return gen_er_graph(k, m, int(rngmod.stream(seed, rngmod.BASELINE).integers(2**63 - 1)))


def shd(g1: Dag, g2: Dag) -> int:
    """Structural Hamming distance; a reversed edge costs 1."""
    if g1.k != g2.k:
        raise ValueError("graphs have different node counts")
    a, b = g1.adjacency, g2.adjacency
    differs = (a != b) | (a.T != b.T)
    return int(np.triu(differs, 1).sum())


def write_edge_list(dag: Dag, path) -> None:
    lines = [f"k={dag.k}"] + [f"{i + 1} {j + 1}" for i, j in dag.edges()]
    Path(path).write_text("\n".join(lines) + "\n")


def read_edge_list(path) -> Dag:
    lines = [ln.strip() for ln in Path(path).read_text().splitlines() if ln.strip()]
    if not lines or not lines[0].startswith("k="):
        raise ValueError("edge list must start with a 'k=<nodes>' header")
    k = int(lines[0][2:])
    adj = np.zeros((k, k), dtype=np.int8)
    for ln in lines[1:]:
        i, j = (int(x) for x in ln.split())
        adj[i - 1, j - 1] = 1
    return Dag(adj)
