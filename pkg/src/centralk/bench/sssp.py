"""Single source shortest paths: sequential Dijkstra and a k-relaxed parallel version."""
from __future__ import annotations

import dataclasses
import heapq
import math

from ..atomics import Runtime
from ..config import StorageConfig
from ..item import Strategy
from ..scheduler import RunStats, Task, run
from .graph import BenchGraph

INF = math.inf


def sssp_seq(graph: BenchGraph, source: int = 0) -> list:
    """Exact distances from ``source``; unreachable nodes get ``math.inf``."""
    if not 0 <= source < graph.n:
        raise ValueError(f"source {source} outside [0, {graph.n})")
    dist = [INF] * graph.n
    dist[source] = 0
    heap = [(0, source)]
    adj = graph.adjacency
    while heap:
        d, u = heapq.heappop(heap)
        if d > dist[u]:
            continue
        for v, w in adj[u]:
            nd = d + w
            if nd < dist[v]:
                dist[v] = nd
                heapq.heappush(heap, (nd, v))
    return dist


@dataclasses.dataclass
class SSSPRun:
    dist: list
    stats: RunStats
    stale: int
    updates: list | None = None


def sssp_priority(d: int, v: int, n: int) -> int:
    # smaller distance first, then smaller node id
    return -(d * n + v)


def run_sssp(graph: BenchGraph, source: int = 0, k: int = 0, threads: int = 1,
             config: StorageConfig | None = None, runtime: Runtime | None = None,
             record_updates: bool = False) -> SSSPRun:
    """Label-correcting Dijkstra over the task storage.

    A task ``(u, d)`` is dropped if ``dist[u]`` already went below ``d``;
    otherwise every neighbour is lowered by a relaxed compare-exchange loop
    and re-queued when the lowering succeeded.  The minimum is monotone, so
    the result at quiescence does not depend on the schedule.
    """
    if not 0 <= source < graph.n:
        raise ValueError(f"source {source} outside [0, {graph.n})")
    config = config or StorageConfig()
    rt = runtime or Runtime(config.ordering)
    n = graph.n
    adj = graph.adjacency
    dist = [rt.atomic(INF, "sssp.dist") for _ in range(n)]
    dist[source].store(0, rt.mo.relaxed)
    relaxed = rt.mo.relaxed
    stale = [0] * threads
    updates = [[] for _ in range(threads)] if record_updates else None

    def relax(worker, u, d):
        if d > dist[u].load(relaxed):
            stale[worker.id] += 1
            return
        for v, w in adj[u]:
            nd = d + w
            cell = dist[v]
            cur = cell.load(relaxed)
            while nd < cur:
                ok, cur = cell.compare_exchange_weak(cur, nd, relaxed, relaxed)
                if ok:
                    if updates is not None:
                        updates[worker.id].append((v, cur, nd))
                    worker.spawn(relax, v, nd, priority=sssp_priority(nd, v, n), k=k)
                    break

    root = Task(relax, (source, 0), Strategy(sssp_priority(0, source, n), k))
    stats = run(threads, [root], config, rt)
    return SSSPRun([c.load(relaxed) for c in dist], stats, sum(stale),
                   [u for per in updates for u in per] if updates is not None else None)


def sssp_parallel(graph: BenchGraph, source: int = 0, k: int = 0, threads: int = 1,
                  config: StorageConfig | None = None) -> list:
    return run_sssp(graph, source, k, threads, config).dist
