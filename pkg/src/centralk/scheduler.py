"""A small worker pool that executes tasks drawn from the k-relaxed storage.

Tasks are ``(fn, args, strategy)`` triples; a running task receives its
:class:`Worker` and may :meth:`~Worker.spawn` more tasks.  The run ends when
the outstanding-task counter (incremented before every push, decremented
after every execution) reaches zero.
"""
from __future__ import annotations

import dataclasses
import time
from typing import Any, Callable, NamedTuple, Sequence

from .atomics import Runtime
from .config import StorageConfig
from .item import Strategy
from .place import EMPTY, PerformanceCounters, Place
from .storage import GlobalTaskStorage
from .tracing import spawn_threads


class Task(NamedTuple):
    fn: Callable[..., Any]
    args: tuple
    strategy: Strategy


class WatchdogTimeout(RuntimeError):
    """No task was claimed anywhere for the watchdog budget while work was outstanding."""


@dataclasses.dataclass
class RunStats:
    wall_time: float
    counters: list[PerformanceCounters]
    executed: int
    pushed: int

    @property
    def total(self) -> PerformanceCounters:
        total = PerformanceCounters()
        for c in self.counters:
            total = total + c
        return total


class _Shared:
    """Harness-level shared state: outstanding counter, progress stamp, abort flag."""

    def __init__(self, rt: Runtime):
        self.outstanding = rt.atomic(0, "Scheduler.outstanding")
        self.last_progress = rt.atomic(time.monotonic(), "Scheduler.last_progress")
        self.abort = rt.atomic(False, "Scheduler.abort")


class Worker:
    def __init__(self, place: Place, shared: _Shared):
        self.place = place
        self.id = place.id
        self._shared = shared
        self._mo = place.rt.mo
        self.executed = 0
        self.pushed = 0

    def spawn(self, fn, *args, priority=0, k=0) -> None:
        self._shared.outstanding.fetch_add(1, self._mo.relaxed)
        self.pushed += 1
        self.place.push(Strategy(priority, k), (fn, args))

    def spawn_task(self, task: Task) -> None:
        self.spawn(task.fn, *task.args, priority=task.strategy.priority, k=task.strategy.k)


def worker_loop(worker: Worker, backoff_base: float = 1e-5, backoff_cap: float = 1e-3,
                watchdog: float | None = 30.0) -> None:
    """Pop and execute until the outstanding counter is observed at zero."""
    place = worker.place
    shared = worker._shared
    mo = worker._mo
    delay = 0.0
    while True:
        if shared.abort.load(mo.relaxed):
            return
        payload = place.pop()
        if payload is not EMPTY:
            fn, args = payload
            shared.last_progress.store(time.monotonic(), mo.relaxed)
            fn(worker, *args)
            worker.executed += 1
            delay = 0.0
            shared.outstanding.fetch_sub(1, mo.release)
            continue
        if shared.outstanding.load(mo.acquire) == 0:
            return
        if watchdog is not None:
            idle = time.monotonic() - shared.last_progress.load(mo.relaxed)
            if idle > watchdog:
                shared.abort.store(True, mo.relaxed)
                raise WatchdogTimeout(_dump(place, shared, idle))
        delay = backoff_base if delay == 0.0 else min(backoff_cap, delay * 2)
        time.sleep(delay)


def _dump(place: Place, shared: _Shared, idle: float) -> str:
    storage = place.storage
    return (f"no progress for {idle:.1f}s: place {place.id} head={place.head} "
            f"heap={len(place.heap)} tail={storage.tail.load()} "
            f"outstanding={shared.outstanding.load()} counters={place.counters}")


def run(num_threads: int, roots: Sequence[Task], config: StorageConfig | None = None,
        runtime: Runtime | None = None, watchdog: float | None = 30.0,
        backoff_cap: float = 1e-3) -> RunStats:
    """Execute ``roots`` and everything they spawn on ``num_threads`` workers."""
    if num_threads < 1:
        raise ValueError("num_threads must be >= 1")
    config = config or StorageConfig()
    storage = GlobalTaskStorage(num_threads, config, runtime)
    rt = storage.rt
    shared = _Shared(rt)
    workers = [Worker(Place(storage, i), shared) for i in range(num_threads)]

    # roots go in before any worker starts; thread start orders them first
    for task in roots:
        workers[0].spawn_task(task)

    def body(w):
        try:
            worker_loop(w, backoff_cap=backoff_cap, watchdog=watchdog)
        except BaseException:
            shared.abort.store(True, rt.mo.relaxed)
            raise

    start = time.perf_counter()
    join = spawn_threads(rt, [(lambda w=w: body(w)) for w in workers])
    join()
    wall = time.perf_counter() - start

    executed = sum(w.executed for w in workers)
    pushed = sum(w.pushed for w in workers)
    if executed != pushed:
        raise AssertionError(f"executed {executed} tasks but {pushed} were pushed")
    return RunStats(wall, [w.place.counters for w in workers], executed, pushed)


__all__ = ["Task", "RunStats", "Worker", "WatchdogTimeout", "run", "worker_loop"]
