"""Weighted directed graphs, Chung-Lu generation and local neighborhoods.

Node identifiers are 1-based (``1..N``) on every public surface.  Internally
edges are held as parallel numpy arrays of 0-based endpoints so the SI kernels
can build sparse matrices without re-indexing.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from pathlib import Path
from typing import Iterable, Mapping

import numpy as np
import scipy.sparse as sp
from scipy.sparse import csgraph

# log(1 - p) is clamped here so p == 1 stays representable inside sparse sums;
# exp(-50) underflows to a survival probability far below one ulp of 1.0.
LOG_SURVIVAL_FLOOR = -50.0


@dataclass(frozen=True, eq=False)
class WeightedDigraph:
    """Simple directed graph with per-edge propagation probabilities.

    ``src``/``dst`` hold 0-based endpoints and ``prob`` the matching p_ij.
    Edges are kept sorted by (src, dst); absent pairs mean p_ij = 0.
    """

    n: int
    src: np.ndarray
    dst: np.ndarray
    prob: np.ndarray

    def __post_init__(self):
        if self.n < 1:
            raise ValueError(f"node count must be positive, got {self.n}")
        src = np.asarray(self.src, dtype=np.int64)
        dst = np.asarray(self.dst, dtype=np.int64)
        prob = np.asarray(self.prob, dtype=np.float64)
        if not (src.shape == dst.shape == prob.shape) or src.ndim != 1:
            raise ValueError("src, dst and prob must be 1-d arrays of equal length")
        if src.size:
            if src.min() < 0 or dst.min() < 0 or src.max() >= self.n or dst.max() >= self.n:
                raise ValueError("edge endpoint out of range")
            if np.any(src == dst):
                raise ValueError("self-loops are not allowed")
            if np.any(prob <= 0) or np.any(prob > 1):
                raise ValueError("edge probabilities must lie in (0, 1]")
        order = np.lexsort((dst, src))
        src, dst, prob = src[order], dst[order], prob[order]
        if src.size > 1:
            dup = (np.diff(src) == 0) & (np.diff(dst) == 0)
            if dup.any():
                raise ValueError("duplicate edges are not allowed")
        for name, arr in (("src", src), ("dst", dst), ("prob", prob)):
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    @classmethod
    def from_edges(cls, n: int, edges: Mapping[tuple[int, int], float]) -> "WeightedDigraph":
        """Build from a ``{(i, j): p_ij}`` mapping with 1-based ids."""
        if not edges:
            empty = np.empty(0, dtype=np.int64)
            return cls(n, empty, empty, np.empty(0))
        pairs = np.array(list(edges.keys()), dtype=np.int64)
        prob = np.fromiter(edges.values(), dtype=np.float64, count=len(edges))
        return cls(n, pairs[:, 0] - 1, pairs[:, 1] - 1, prob)

    @property
    def num_edges(self) -> int:
        return int(self.src.size)

    @property
    def nodes(self) -> range:
        return range(1, self.n + 1)

    @property
    def edges(self) -> dict[tuple[int, int], float]:
        return {
            (int(i) + 1, int(j) + 1): float(p)
            for i, j, p in zip(self.src, self.dst, self.prob)
        }

    def __eq__(self, other):
        if not isinstance(other, WeightedDigraph):
            return NotImplemented
        return (
            self.n == other.n
            and np.array_equal(self.src, other.src)
            and np.array_equal(self.dst, other.dst)
            and np.array_equal(self.prob, other.prob)
        )

    __hash__ = None

    @cached_property
    def edge_log_survival(self) -> np.ndarray:
        """Per-edge log(1 - p_ij), floored so p = 1 stays finite."""
        with np.errstate(divide="ignore"):
            logs = np.maximum(np.log1p(-self.prob), LOG_SURVIVAL_FLOOR)
        logs.setflags(write=False)
        return logs

    @cached_property
    def log_survival(self) -> sp.csr_matrix:
        """CSR matrix of log(1 - p_ij), rows = source, cols = target."""
        return sp.csr_matrix((self.edge_log_survival, (self.src, self.dst)), shape=(self.n, self.n))

    @cached_property
    def log_survival_in(self) -> sp.csr_matrix:
        """Transpose of ``log_survival``: rows = target."""
        return self.log_survival.T.tocsr()

    @cached_property
    def _in_csr(self) -> sp.csr_matrix:
        # rows = target, so row j lists the in-neighbors of j
        ones = np.ones(self.src.size, dtype=np.int8)
        return sp.csr_matrix((ones, (self.dst, self.src)), shape=(self.n, self.n))

    @cached_property
    def _undirected(self) -> sp.csr_matrix:
        a = sp.csr_matrix(
            (np.ones(self.src.size, dtype=np.int8), (self.src, self.dst)),
            shape=(self.n, self.n),
        )
        return (a + a.T).tocsr()

    def check_node(self, node: int) -> None:
        if not 1 <= node <= self.n:
            raise ValueError(f"node {node} out of range 1..{self.n}")

    def in_neighbor_mask(self, j: int) -> np.ndarray:
        self.check_node(j)
        mask = np.zeros(self.n, dtype=bool)
        row = self._in_csr
        mask[row.indices[row.indptr[j - 1]:row.indptr[j]]] = True
        return mask


def power_law_weights(n: int, C: float, gamma: float) -> np.ndarray:
    """Chung-Lu weights ``w_i = C * i**(-1/(gamma-1))`` for i = 1..n."""
    if n < 1:
        raise ValueError("n must be at least 1")
    if C <= 0:
        raise ValueError("C must be positive")
    if gamma <= 2:
        raise ValueError(f"gamma must exceed 2, got {gamma}")
    i = np.arange(1, n + 1, dtype=np.float64)
    return C * i ** (-1.0 / (gamma - 1.0))


def chung_lu_probabilities(weights: np.ndarray) -> np.ndarray:
    """Dense matrix of ``min(1, w_i w_j / sum(w))`` with a zero diagonal."""
    w = np.asarray(weights, dtype=np.float64)
    if w.size == 0:
        raise ValueError("weight sequence is empty")
    if np.any(w <= 0):
        raise ValueError("weights must be positive")
    p = np.minimum(1.0, np.outer(w, w) / w.sum())
    np.fill_diagonal(p, 0.0)
    return p


def chung_lu_generate(
    weights: Iterable[float],
    rng: np.random.Generator,
    prune_threshold: float = 0.0,
) -> WeightedDigraph:
    """Sample a directed Chung-Lu graph.

    Each ordered pair (i, j), i != j, is present independently with
    probability p_ij and the stored edge weight is that same p_ij.
    ``prune_threshold`` drops pairs below the threshold; the draw matrix is
    the same either way, so this equals ``prune_edges`` applied afterwards.
    """
    p = chung_lu_probabilities(np.asarray(list(weights), dtype=np.float64))
    n = p.shape[0]
    draws = rng.random((n, n))
    keep = draws < p
    if prune_threshold > 0:
        keep &= p >= prune_threshold
    src, dst = np.nonzero(keep)
    return WeightedDigraph(n, src, dst, p[src, dst])


def prune_edges(g: WeightedDigraph, threshold: float) -> WeightedDigraph:
    keep = g.prob >= threshold
    return WeightedDigraph(g.n, g.src[keep], g.dst[keep], g.prob[keep])


def in_neighbors(g: WeightedDigraph, j: int) -> set[int]:
    return {int(i) + 1 for i in np.flatnonzero(g.in_neighbor_mask(j))}


def _distances(g: WeightedDigraph, starts, directed_in: bool = False) -> np.ndarray:
    """Hop distances from 0-based ``starts``; -1 marks unreachable nodes."""
    if directed_in:
        adj, directed = g._in_csr, True
    else:
        adj, directed = g._undirected, False
    dist = csgraph.shortest_path(adj, directed=directed, unweighted=True, indices=starts)
    dist[np.isinf(dist)] = -1
    return dist.astype(np.int64)


def hop_distances(g: WeightedDigraph, node: int, directed_to: bool = False) -> dict[int, int]:
    """Shortest hop count from ``node`` to every reachable node (1-based ids).

    With ``directed_to`` the distance is measured along directed paths ending
    at ``node`` instead of in the underlying undirected graph.
    """
    g.check_node(node)
    dist = _distances(g, node - 1, directed_in=directed_to)
    return {int(i) + 1: int(d) for i, d in enumerate(dist) if d >= 0}


@dataclass(frozen=True)
class Diameter:
    value: int
    disconnected: bool


def undirected_diameter(g: WeightedDigraph) -> Diameter:
    """Diameter of the underlying undirected graph.

    For a disconnected graph ``value`` is the largest diameter over the
    components and ``disconnected`` is set.
    """
    n_comp, _ = csgraph.connected_components(g._undirected, directed=False)
    dist = _distances(g, None)
    best = int(dist.max()) if dist.size else 0
    return Diameter(best, n_comp > 1)


@dataclass(frozen=True)
class LocalNeighborhood:
    """Induced subgraph around a guarded user, re-indexed to 1..N_local."""

    subgraph: WeightedDigraph
    center: int
    to_global: tuple[int, ...]
    radius: int

    @property
    def n(self) -> int:
        return self.subgraph.n

    @cached_property
    def diameter(self) -> int:
        return undirected_diameter(self.subgraph).value


def local_neighborhood(
    g: WeightedDigraph, c: int, m: int, directed: bool = False
) -> LocalNeighborhood:
    """Nodes within ``m`` hops of ``c`` together with every edge among them.

    Distances are undirected by default; ``directed=True`` keeps only nodes
    with a directed path of length <= m into ``c``.  Local ids follow the
    ascending order of global ids.
    """
    g.check_node(c)
    if m < 1:
        raise ValueError("radius m must be at least 1")
    dist = _distances(g, c - 1, directed_in=directed)
    members = np.flatnonzero((dist >= 0) & (dist <= m))
    local = np.full(g.n, -1, dtype=np.int64)
    local[members] = np.arange(members.size)
    keep = (local[g.src] >= 0) & (local[g.dst] >= 0)
    sub = WeightedDigraph(members.size, local[g.src[keep]], local[g.dst[keep]], g.prob[keep])
    return LocalNeighborhood(
        subgraph=sub,
        center=int(local[c - 1]) + 1,
        to_global=tuple(int(v) + 1 for v in members),
        radius=m,
    )


def write_edgelist(g: WeightedDigraph, path: str | Path) -> None:
    """Write ``nodes N`` followed by one ``i j p_ij`` line per edge."""
    with open(path, "w") as fh:
        fh.write(f"nodes {g.n}\n")
        for i, j, p in zip(g.src, g.dst, g.prob):
            fh.write(f"{i + 1} {j + 1} {float(p)!r}\n")


def read_edgelist(path: str | Path) -> WeightedDigraph:
    with open(path) as fh:
        header = fh.readline().split()
        if len(header) != 2 or header[0] != "nodes":
            raise ValueError(f"{path}: expected 'nodes N' header, got {header}")
        n = int(header[1])
        edges = {}
        for lineno, line in enumerate(fh, start=2):
            parts = line.split()
            if not parts:
                continue
            if len(parts) != 3:
                raise ValueError(f"{path}:{lineno}: expected 'i j p'")
            edges[(int(parts[0]), int(parts[1]))] = float(parts[2])
    return WeightedDigraph.from_edges(n, edges)
