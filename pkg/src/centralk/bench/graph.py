"""Seeded random undirected graphs for the benchmarks."""
from __future__ import annotations

import dataclasses

import numpy as np

from ..rng import GRAPH_GENERATOR_VERSION, philox


@dataclasses.dataclass(frozen=True, eq=False)
class BenchGraph:
    """Undirected weighted graph, edges listed once (u < v) and per endpoint."""

    n: int
    src: np.ndarray
    dst: np.ndarray
    weight: np.ndarray
    adjacency: tuple

    @classmethod
    def from_edges(cls, n: int, edges) -> "BenchGraph":
        edges = sorted((min(u, v), max(u, v), w) for u, v, w in edges)
        for u, v, w in edges:
            if u == v:
                raise ValueError(f"self-loop at node {u}")
            if not 0 <= u < v < n:
                raise ValueError(f"edge ({u}, {v}) outside [0, {n})")
            if w < 1:
                raise ValueError(f"edge ({u}, {v}) has non-positive weight {w}")
        arr = np.array(edges, dtype=np.int64).reshape(-1, 3)
        return cls._build(n, arr[:, 0], arr[:, 1], arr[:, 2])

    @classmethod
    def _build(cls, n, src, dst, weight):
        adj = [[] for _ in range(n)]
        for u, v, w in zip(src.tolist(), dst.tolist(), weight.tolist()):
            adj[u].append((v, w))
            adj[v].append((u, w))
        return cls(n, src, dst, weight, tuple(tuple(a) for a in adj))

    @property
    def num_edges(self) -> int:
        return len(self.src)

    def edges(self):
        return zip(self.src.tolist(), self.dst.tolist(), self.weight.tolist())

    def to_bytes(self) -> bytes:
        head = np.array([self.n, self.num_edges], dtype=np.int64).tobytes()
        return head + self.src.tobytes() + self.dst.tobytes() + self.weight.tobytes()

    def weight_matrix(self) -> np.ndarray:
        m = np.zeros((self.n, self.n), dtype=np.int64)
        m[self.src, self.dst] = self.weight
        m[self.dst, self.src] = self.weight
        return m


def gen_graph(n: int, p: float, max_w: int, seed: int) -> BenchGraph:
    """Random graph: each pair i < j is an edge with probability ``p``.

    Rows are generated in order of ``i``.  For each row the generator first
    draws one uniform per candidate ``j > i`` and then one weight in
    ``[1, max_w]`` per included pair, so the output depends only on
    ``(n, p, max_w, seed)`` and the stream version ``philox-rowwise-v1``.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"p must lie in [0, 1], got {p}")
    if max_w < 1:
        raise ValueError("max_w must be >= 1")
    rng = philox(seed, "graph:" + GRAPH_GENERATOR_VERSION, n)
    src, dst, weight = [], [], []
    for i in range(n - 1):
        js = np.arange(i + 1, n, dtype=np.int64)
        keep = js[rng.random(len(js)) < p]
        src.append(np.full(len(keep), i, dtype=np.int64))
        dst.append(keep)
        weight.append(rng.integers(1, int(max_w) + 1, size=len(keep), dtype=np.int64))
    if src:
        src, dst, weight = np.concatenate(src), np.concatenate(dst), np.concatenate(weight)
    else:
        src = dst = weight = np.zeros(0, dtype=np.int64)
    return BenchGraph._build(n, src, dst, weight)
