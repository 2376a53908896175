"""Random graphs and shortest-path distances for the simulation designs."""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import shortest_path

from .permute import RngStream

__all__ = [
    "DistanceMatrix",
    "Graph",
    "UNREACHABLE",
    "all_pairs_distances",
    "attachment_weights",
    "barabasi_albert",
    "erdos_renyi",
    "max_degree",
    "read_edge_list",
    "write_edge_list",
]

#: marker for pairs in different connected components
UNREACHABLE = -1

BA_SEED_SIZE = 20
BA_SEED_LAMBDA = 1.0
#: weight floor, relative to the total degree, that keeps isolated seed nodes reachable
BA_ISOLATED_WEIGHT = 1e-9


@dataclass(frozen=True)
class Graph:
    """Undirected simple graph on nodes ``0..n-1`` with sorted neighbor lists."""

    n: int
    adjacency: tuple[tuple[int, ...], ...]

    @classmethod
    def from_edges(cls, n: int, edges) -> "Graph":
        nbrs: list[set[int]] = [set() for _ in range(n)]
        for i, j in edges:
            i, j = int(i), int(j)
            if not (0 <= i < n and 0 <= j < n):
                raise ValueError(f"edge ({i}, {j}) out of range for n={n}")
            if i == j:
                raise ValueError(f"self-loop at node {i}")
            nbrs[i].add(j)
            nbrs[j].add(i)
        return cls(n, tuple(tuple(sorted(s)) for s in nbrs))

    @classmethod
    def empty(cls, n: int) -> "Graph":
        return cls(n, tuple(() for _ in range(n)))

    def edges(self) -> list[tuple[int, int]]:
        """Each undirected edge once as ``(i, j)`` with ``i < j``, in lexicographic order."""
        return [(i, j) for i, nb in enumerate(self.adjacency) for j in nb if i < j]

    @property
    def num_edges(self) -> int:
        return sum(len(nb) for nb in self.adjacency) // 2

    def degrees(self) -> np.ndarray:
        return np.array([len(nb) for nb in self.adjacency], dtype=np.int64)

    def to_sparse(self) -> csr_matrix:
        rows = np.repeat(np.arange(self.n), self.degrees())
        cols = np.fromiter((j for nb in self.adjacency for j in nb), dtype=np.int64,
                           count=int(self.degrees().sum()))
        return csr_matrix((np.ones(rows.size), (rows, cols)), shape=(self.n, self.n))


def erdos_renyi(n: int, lam: float, rng: RngStream) -> Graph:
    """Each pair is joined independently with probability ``lam / (n - 1)``."""
    if n < 2:
        raise ValueError("n must be at least 2")
    if not 0.0 <= lam <= n - 1:
        raise ValueError(f"lambda must lie in [0, n-1], got {lam}")
    p = lam / (n - 1)
    rows, cols = np.triu_indices(n, k=1)
    keep = rng.generator.random(rows.size) < p
    return Graph.from_edges(n, zip(rows[keep], cols[keep]))


def attachment_weights(degree: np.ndarray) -> np.ndarray:
    """Degree plus a floor of ``BA_ISOLATED_WEIGHT`` times the total degree (at least 1)."""
    return degree + BA_ISOLATED_WEIGHT * max(1.0, float(degree.sum()))


def barabasi_albert(n: int, m_attach: int, rng: RngStream) -> Graph:
    """Preferential attachment grown from an Erdos-Renyi seed of 20 nodes, lambda 1.

    Each new node attaches to ``m_attach`` distinct existing nodes drawn
    sequentially without replacement with probability proportional to their
    degree.  Degrees are updated only after all edges of the new node are
    placed.  A small weight floor keeps isolated seed nodes selectable.
    """
    if n < BA_SEED_SIZE + 1:
        raise ValueError(f"n must be at least {BA_SEED_SIZE + 1}")
    if not 1 <= m_attach <= BA_SEED_SIZE:
        raise ValueError(f"m_attach must lie in [1, {BA_SEED_SIZE}]")
    seed_graph = erdos_renyi(BA_SEED_SIZE, BA_SEED_LAMBDA, rng)
    gen = rng.generator
    edges = seed_graph.edges()
    degree = np.zeros(n, dtype=float)
    degree[:BA_SEED_SIZE] = seed_graph.degrees()
    for new in range(BA_SEED_SIZE, n):
        weights = attachment_weights(degree[:new])
        targets = []
        for _ in range(m_attach):
            cdf = np.cumsum(weights)
            pick = int(np.searchsorted(cdf, gen.random() * cdf[-1], side="right"))
            pick = min(pick, new - 1)
            targets.append(pick)
            weights[pick] = 0.0
        for t in targets:
            edges.append((t, new))
            degree[t] += 1
        degree[new] = m_attach
    return Graph.from_edges(n, edges)


def max_degree(g: Graph) -> int:
    return int(g.degrees().max(initial=0))


@dataclass(frozen=True)
class DistanceMatrix:
    """Shortest-path lengths; :data:`UNREACHABLE` marks disconnected pairs."""

    values: np.ndarray

    @property
    def n(self) -> int:
        return self.values.shape[0]

    @property
    def finite(self) -> np.ndarray:
        return self.values != UNREACHABLE


def all_pairs_distances(g: Graph) -> DistanceMatrix:
    """Breadth-first search from every node."""
    if g.n == 0:
        return DistanceMatrix(np.zeros((0, 0), dtype=np.int32))
    d = shortest_path(g.to_sparse(), method="D", directed=False, unweighted=True)
    out = np.full(d.shape, UNREACHABLE, dtype=np.int32)
    ok = np.isfinite(d)
    out[ok] = d[ok].astype(np.int32)
    out.setflags(write=False)
    return DistanceMatrix(out)


def write_edge_list(g: Graph, path) -> None:
    """Header ``n=<n>`` followed by one ``i j`` line per edge, 0-based."""
    lines = [f"n={g.n}"] + [f"{i} {j}" for i, j in g.edges()]
    Path(path).write_text("\n".join(lines) + "\n")


def read_edge_list(path) -> Graph:
    lines = [ln.strip() for ln in Path(path).read_text().splitlines()]
    lines = [ln for ln in lines if ln and not ln.startswith("#")]
    if not lines or not lines[0].startswith("n="):
        raise ValueError(f"{path}: first line must be 'n=<count>'")
    n = int(lines[0][2:])
    edges = []
    for lineno, ln in enumerate(lines[1:], start=2):
        parts = ln.split()
        if len(parts) != 2:
            raise ValueError(f"{path}: line {lineno}: expected 'i j'")
        edges.append((int(parts[0]), int(parts[1])))
    return Graph.from_edges(n, edges)
