"""Balanced graph bipartitioning: exhaustive oracle and parallel branch and bound.

Nodes are split into a set A of ``n // 2`` nodes and a set B holding the rest;
the objective is the total weight of edges between A and B.
"""
from __future__ import annotations

import dataclasses
import math

import numpy as np

from ..atomics import Runtime
from ..config import StorageConfig
from ..item import Strategy
from ..scheduler import RunStats, Task, run
from .graph import BenchGraph

MAX_EXHAUSTIVE_N = 20


def _balanced_masks(n: int) -> np.ndarray:
    masks = np.arange(1 << n, dtype=np.int64)
    counts = np.zeros_like(masks)
    for b in range(n):
        counts += (masks >> b) & 1
    return masks[counts == n // 2]


def gp_seq(graph: BenchGraph) -> int:
    """Minimum cut over every split with ``|A| = n // 2`` (n <= 20)."""
    n = graph.n
    if n > MAX_EXHAUSTIVE_N:
        raise ValueError(f"exhaustive oracle limited to n <= {MAX_EXHAUSTIVE_N}, got {n}")
    masks = _balanced_masks(n)
    cut = np.zeros(len(masks), dtype=np.int64)
    for u, v, w in graph.edges():
        cut += w * (((masks >> u) ^ (masks >> v)) & 1)
    return int(cut.min())


def _subtree_min(wm, depth, in_a, cap_a, cap_b, cut) -> float:
    # exhaustive completion of a partial assignment; used to re-check prunes
    n = len(wm)
    if depth == n:
        return cut
    best = math.inf
    for to_a, cap in ((True, cap_a), (False, cap_b)):
        if cap == 0:
            continue
        extra = sum(int(wm[depth][v]) for v in range(depth) if in_a[v] != to_a)
        best = min(best, _subtree_min(wm, depth + 1, in_a + (to_a,),
                                      cap_a - to_a, cap_b - (not to_a), cut + extra))
    return best


def lower_bound(depth, cap_a, cap_b, cut, cost_a, cost_b) -> int:
    """Cut so far plus, per unassigned node, its cheapest admissible side.

    ``cost_a[u]`` is the weight of edges from ``u`` to nodes already in B
    (cut if ``u`` joins A); ``cost_b[u]`` the same toward A.
    """
    lb = cut
    n = len(cost_a)
    if cap_a and cap_b:
        for u in range(depth, n):
            a, b = cost_a[u], cost_b[u]
            lb += a if a < b else b
    elif cap_a:
        lb += sum(cost_a[depth:])
    else:
        lb += sum(cost_b[depth:])
    return lb


def gp_priority(lb: int, depth: int, n: int) -> int:
    # smaller bound first, deeper first among equal bounds
    return -lb * (n + 1) + depth


@dataclasses.dataclass
class GPRun:
    best: int
    stats: RunStats
    pruned: int
    leaves: int


def run_gp(graph: BenchGraph, threads: int = 1, k: int = 0, config: StorageConfig | None = None,
           runtime: Runtime | None = None, check_prunes: bool = False) -> GPRun:
    """Branch and bound fixing node ``depth`` to A or B in each task.

    The incumbent lives in one atomic cell lowered by compare-exchange; a
    task whose bound is not below the incumbent is dropped.  With
    ``check_prunes`` every pruned subtree is solved exhaustively to confirm
    it held nothing better than the incumbent at prune time.
    """
    config = config or StorageConfig()
    rt = runtime or Runtime(config.ordering)
    relaxed = rt.mo.relaxed
    n = graph.n
    adj = graph.adjacency
    wm = graph.weight_matrix() if check_prunes else None
    best = rt.atomic(math.inf, "gp.best")
    pruned = [0] * threads
    leaves = [0] * threads
    bad_prunes = []

    def prune(worker, lb, depth, in_a, cap_a, cap_b, cut):
        bound = best.load(relaxed)
        if lb < bound:
            return False
        pruned[worker.id] += 1
        if wm is not None:
            exact = _subtree_min(wm, depth, in_a, cap_a, cap_b, cut)
            if exact < bound:
                bad_prunes.append((in_a, exact, bound))
        return True

    def branch(worker, depth, in_a, cap_a, cap_b, cut, cost_a, cost_b, lb):
        if prune(worker, lb, depth, in_a, cap_a, cap_b, cut):
            return
        if depth == n:
            leaves[worker.id] += 1
            cur = best.load(relaxed)
            while cut < cur:
                ok, cur = best.compare_exchange_weak(cur, cut, relaxed, relaxed)
                if ok:
                    break
            return
        for to_a, cap in ((True, cap_a), (False, cap_b)):
            if cap == 0:
                continue
            ca, cb = list(cost_a), list(cost_b)
            new_cut = cut + (cost_a[depth] if to_a else cost_b[depth])
            side = cb if to_a else ca
            for v, w in adj[depth]:
                if v > depth:
                    side[v] += w
            na, nb = cap_a - to_a, cap_b - (not to_a)
            child_lb = lower_bound(depth + 1, na, nb, new_cut, ca, cb)
            child = in_a + (to_a,)
            if prune(worker, child_lb, depth + 1, child, na, nb, new_cut):
                continue
            worker.spawn(branch, depth + 1, child, na, nb, new_cut, tuple(ca), tuple(cb), child_lb,
                         priority=gp_priority(child_lb, depth + 1, n), k=k)

    zeros = (0,) * n
    root = Task(branch, (0, (), n // 2, n - n // 2, 0, zeros, zeros, 0), Strategy(gp_priority(0, 0, n), k))
    stats = run(threads, [root], config, rt)
    if bad_prunes:
        raise AssertionError(f"pruned subtrees held better solutions: {bad_prunes[:3]}")
    return GPRun(best.load(relaxed), stats, sum(pruned), sum(leaves))


def gp_parallel(graph: BenchGraph, threads: int = 1, k: int = 0,
                config: StorageConfig | None = None) -> int:
    return run_gp(graph, threads, k, config).best
