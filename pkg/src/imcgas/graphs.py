"""Enumeration of connected labeled graphs on small vertex sets."""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from itertools import combinations

__all__ = ["GraphSet", "connected_graphs"]

MAX_VERTICES = 5


@dataclass(frozen=True)
class GraphSet:
    """All connected labeled graphs on n vertices, each as a tuple of edges."""

    n: int
    graphs: tuple[tuple[tuple[int, int], ...], ...]

    def __len__(self):
        return len(self.graphs)


def _is_connected(n: int, edges) -> bool:
    parent = list(range(n))

    def find(a):
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a

    for i, j in edges:
        parent[find(i)] = find(j)
    root = find(0)
    return all(find(v) == root for v in range(n))


@lru_cache(maxsize=None)
def connected_graphs(n: int) -> GraphSet:
    """Every connected graph on vertices {0..n-1}, exactly once.

    Counts for n = 1..5: 1, 1, 4, 38, 728.
    """
    if not 1 <= n <= MAX_VERTICES:
        raise ValueError(f"n must be in 1..{MAX_VERTICES}, got {n}")
    pairs = list(combinations(range(n), 2))
    out = []
    for mask in range(1 << len(pairs)):
        edges = tuple(pairs[k] for k in range(len(pairs)) if mask >> k & 1)
        if _is_connected(n, edges):
            out.append(edges)
    return GraphSet(n, tuple(out))
