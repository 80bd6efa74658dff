"""Independent oracles and small fixtures shared by the tests."""
from __future__ import annotations

from collections import deque
from fractions import Fraction

import numpy as np

from prebunk.netgraph import WeightedDigraph


def bfs_distances(g: WeightedDigraph, start: int, undirected: bool = True) -> dict[int, int]:
    """Plain-Python BFS; 1-based ids, unreachable nodes absent."""
    adj: dict[int, set[int]] = {v: set() for v in g.nodes}
    for (i, j) in g.edges:
        adj[i].add(j)
        if undirected:
            adj[j].add(i)
    dist = {start: 0}
    queue = deque([start])
    while queue:
        u = queue.popleft()
        for v in adj[u]:
            if v not in dist:
                dist[v] = dist[u] + 1
                queue.append(v)
    return dist


def bfs_diameter(g: WeightedDigraph) -> tuple[int, bool]:
    best, comps, seen = 0, 0, set()
    for v in g.nodes:
        d = bfs_distances(g, v)
        best = max(best, max(d.values()))
        if v not in seen:
            comps += 1
            seen |= d.keys()
    return best, comps > 1


def simplex_max(c, A, b):
    """Maximise c.x s.t. A x <= b, x >= 0 with b >= 0, exact rational tableau, Bland's rule."""
    m, n = len(A), len(c)
    T = [[Fraction(v) for v in row] + [Fraction(int(i == r)) for i in range(m)] + [Fraction(b[r])]
         for r, row in enumerate(A)]
    z = [Fraction(-v) for v in c] + [Fraction(0)] * (m + 1)
    basis = list(range(n, n + m))
    while True:
        enter = next((j for j in range(n + m) if z[j] < 0), None)
        if enter is None:
            break
        ratios = [(T[r][-1] / T[r][enter], basis[r], r) for r in range(m) if T[r][enter] > 0]
        if not ratios:
            raise ValueError("unbounded")
        _, _, leave = min(ratios)
        piv = T[leave][enter]
        T[leave] = [v / piv for v in T[leave]]
        for r in range(m):
            if r != leave and T[r][enter] != 0:
                f = T[r][enter]
                T[r] = [a - f * b_ for a, b_ in zip(T[r], T[leave])]
        f = z[enter]
        z = [a - f * b_ for a, b_ in zip(z, T[leave])]
        basis[leave] = enter
    x = [Fraction(0)] * (n + m)
    for r, bv in enumerate(basis):
        x[bv] = T[r][-1]
    return z[-1], x[:n]


def lp_simplex_u(t0: int, deadlines) -> Fraction:
    """Max-min-gap LP via the exact simplex, in gap variables.

    Variables ``g_1..g_K, u >= 0`` with ``t_i = t0 + g_1 + ... + g_i``:
    ``u - g_i <= 0`` and ``g_1 + ... + g_i <= d_i - t0``.
    """
    K = len(deadlines)
    A, b = [], []
    for i in range(K):
        row = [0] * (K + 1)
        row[i] = -1
        row[K] = 1
        A.append(row)
        b.append(0)
    for i in range(K):
        A.append([1] * (i + 1) + [0] * (K - i - 1) + [0])
        b.append(deadlines[i] - t0)
    value, _ = simplex_max([0] * K + [1], A, b)
    return value


def grid_search_u(t0: float, deadlines, step: float = 1e-2) -> float:
    """Largest grid ``u`` for which the earliest equispaced schedule meets every deadline.

    For fixed ``u`` the schedule ``t_i = t_{i-1} + u`` is the earliest
    feasible one, so checking it decides feasibility of ``u`` exactly.
    """
    d = np.asarray(deadlines, dtype=float)
    hi = (d[-1] - t0) / 1 + step
    grid = np.arange(0.0, hi + step, step)
    idx = np.arange(1, d.size + 1)
    ok = [(t0 + idx * u <= d + 1e-12).all() for u in grid]
    return float(grid[np.flatnonzero(ok)[-1]])


def chain(n: int, p: float = 1.0) -> WeightedDigraph:
    """Directed path 1 -> 2 -> ... -> n."""
    return WeightedDigraph.from_edges(n, {(i, i + 1): p for i in range(1, n)})
