"""Instrumentation for atomics: ordering ledger, race detector, fault injection.

The detector is a vector-clock happens-before checker in the FastTrack style,
with C++11 acquire/release semantics for atomics:

* a release store publishes the storing thread's clock on the cell; a relaxed
  store by any thread ends the release sequence unless a release fence
  preceded it;
* read-modify-write operations extend the release sequence they read from;
* an acquire load joins the cell's clock into the loading thread;
* a relaxed load remembers the cell's clock so that a later acquire fence can
  join it;
* sequentially consistent fences additionally synchronise through one global
  clock.

Plain (non-atomic) shared fields are reported through :meth:`Tracer.read` and
:meth:`Tracer.write`.  Two accesses to the same field race when at least one
is a write and neither happens-before the other.
"""
from __future__ import annotations

import collections
import dataclasses
import random
import threading
import time

from .atomics import MemoryOrder, SEQ_CST


def _join(into: dict, other: dict) -> None:
    for tid, c in other.items():
        if into.get(tid, 0) < c:
            into[tid] = c


@dataclasses.dataclass(frozen=True)
class Race:
    location: str
    kind: str  # "write-write", "write-read" or "read-write"
    first_site: str
    first_thread: int
    second_site: str
    second_thread: int

    def __str__(self):
        return (f"{self.kind} race on {self.location}: "
                f"T{self.first_thread} at {self.first_site} / "
                f"T{self.second_thread} at {self.second_site}")


class _ThreadState:
    __slots__ = ("tid", "vc", "pending_acquire", "release_fence")

    def __init__(self, tid, vc):
        self.tid = tid
        self.vc = vc
        self.pending_acquire = {}
        self.release_fence = None


class _VarState:
    __slots__ = ("write", "reads")

    def __init__(self):
        self.write = None  # (tid, epoch, site)
        self.reads = {}    # tid -> (epoch, site)


class RaceDetector:
    """Happens-before race detector.  All methods expect the tracer lock held."""

    def __init__(self):
        self._local = threading.local()
        self._next_tid = 0
        self._cells = {}      # id(cell) -> clock of the release sequence it heads
        self._vars = {}       # (id(obj), field) -> _VarState
        self._keepalive = {}  # id(obj) -> obj, so ids are not recycled mid-run
        self._sc_clock = {}
        self.races: list[Race] = []
        self._seen = set()

    # -- threads -----------------------------------------------------------
    def _state(self) -> _ThreadState:
        st = getattr(self._local, "state", None)
        if st is None:
            st = self._new_state({})
        return st

    def _new_state(self, inherited) -> _ThreadState:
        tid = self._next_tid
        self._next_tid += 1
        vc = dict(inherited)
        vc[tid] = 1
        st = _ThreadState(tid, vc)
        self._local.state = st
        return st

    def current_tid(self) -> int:
        return self._state().tid

    def fork(self) -> dict:
        st = self._state()
        token = dict(st.vc)
        st.vc[st.tid] += 1
        return token

    def attach(self, token: dict) -> int:
        return self._new_state(token).tid

    def detach(self) -> dict:
        st = self._state()
        self._local.state = None
        return dict(st.vc)

    def join(self, clock: dict) -> None:
        _join(self._state().vc, clock)

    # -- atomics -----------------------------------------------------------
    def on_load(self, cell, order: MemoryOrder) -> None:
        st = self._state()
        sync = self._cells.get(id(cell))
        if not sync:
            return
        if order.acquires:
            _join(st.vc, sync)
        else:
            _join(st.pending_acquire, sync)

    def on_store(self, cell, order: MemoryOrder) -> None:
        st = self._state()
        if order.releases:
            self._cells[id(cell)] = dict(st.vc)
            st.vc[st.tid] += 1
        elif st.release_fence is not None:
            self._cells[id(cell)] = dict(st.release_fence)
        else:
            self._cells.pop(id(cell), None)
        self._keepalive[id(cell)] = cell

    def on_rmw(self, cell, order: MemoryOrder) -> None:
        self.on_load(cell, order)
        st = self._state()
        sync = self._cells.get(id(cell))
        sync = dict(sync) if sync else {}
        if order.releases:
            _join(sync, st.vc)
            st.vc[st.tid] += 1
        elif st.release_fence is not None:
            _join(sync, st.release_fence)
        if sync:
            self._cells[id(cell)] = sync
        self._keepalive[id(cell)] = cell

    def fence(self, order: MemoryOrder) -> None:
        st = self._state()
        if order.acquires:
            _join(st.vc, st.pending_acquire)
        if order is SEQ_CST:
            _join(st.vc, self._sc_clock)
            self._sc_clock = dict(st.vc)
        if order.releases:
            st.release_fence = dict(st.vc)
            st.vc[st.tid] += 1

    # -- plain fields --------------------------------------------------------
    def _report(self, location, kind, first, second_site, second_tid):
        key = (location, kind, first[2], second_site)
        if key in self._seen:
            return
        self._seen.add(key)
        self.races.append(Race(location, kind, first[2], first[0], second_site, second_tid))

    def read(self, obj, field: str, site: str) -> None:
        st = self._state()
        key = (id(obj), field)
        var = self._vars.get(key)
        if var is None:
            var = self._vars[key] = _VarState()
            self._keepalive[id(obj)] = obj
        w = var.write
        if w is not None and w[0] != st.tid and w[1] > st.vc.get(w[0], 0):
            self._report(f"{type(obj).__name__}.{field}", "write-read", w, site, st.tid)
        var.reads[st.tid] = (st.vc[st.tid], site)

    def write(self, obj, field: str, site: str) -> None:
        st = self._state()
        key = (id(obj), field)
        var = self._vars.get(key)
        if var is None:
            var = self._vars[key] = _VarState()
            self._keepalive[id(obj)] = obj
        location = f"{type(obj).__name__}.{field}"
        w = var.write
        if w is not None and w[0] != st.tid and w[1] > st.vc.get(w[0], 0):
            self._report(location, "write-write", w, site, st.tid)
        for tid, (epoch, rsite) in var.reads.items():
            if tid != st.tid and epoch > st.vc.get(tid, 0):
                self._report(location, "read-write", (tid, epoch, rsite), site, st.tid)
        var.write = (st.tid, st.vc[st.tid], site)
        var.reads = {}


class Tracer:
    """Receives every atomic access made through a traced :class:`Runtime`.

    Parameters
    ----------
    detect_races:
        attach a :class:`RaceDetector`.
    spurious_rate:
        probability that a ``compare_exchange_weak`` whose comparison
        succeeds fails anyway, as C++ permits.
    yield_rate:
        probability of giving up the GIL before an atomic access; used by
        the randomized-yield stress when no controlled scheduler is attached.
    scheduler:
        a :class:`~centralk.interleave.ControlledScheduler` that decides which
        thread runs at every atomic access.
    """

    def __init__(self, detect_races: bool = True, spurious_rate: float = 0.0,
                 yield_rate: float = 0.0, scheduler=None, seed: int = 0):
        self.lock = threading.Lock()
        self.detector = RaceDetector() if detect_races else None
        self.spurious_rate = spurious_rate
        self.yield_rate = yield_rate
        self.scheduler = scheduler
        self._rng = random.Random(seed)
        self.ledger = collections.Counter()
        self.spurious_failures = 0
        self.max_spins = 0

    @property
    def races(self) -> list[Race]:
        return self.detector.races if self.detector is not None else []

    # -- hooks called by TracedAtomic ----------------------------------------
    def point(self, cell, op, order, failure=None):
        key = (cell.name, op, order.name) if failure is None else \
            (cell.name, op, order.name, failure.name)
        with self.lock:
            self.ledger[key] += 1
        if self.scheduler is not None:
            self.scheduler.point()
        elif self.yield_rate and self._rng.random() < self.yield_rate:
            time.sleep(0)

    def spurious_failure(self, cell) -> bool:
        if self.spurious_rate and self._rng.random() < self.spurious_rate:
            self.spurious_failures += 1
            return True
        return False

    def on_load(self, cell, order):
        if self.detector is not None:
            self.detector.on_load(cell, order)

    def on_store(self, cell, order):
        if self.detector is not None:
            self.detector.on_store(cell, order)

    def on_rmw(self, cell, order):
        if self.detector is not None:
            self.detector.on_rmw(cell, order)

    # -- hooks called by algorithm code ----------------------------------------
    def fence(self, order: MemoryOrder) -> None:
        with self.lock:
            self.ledger[("fence", "fence", order.name)] += 1
        if self.scheduler is not None:
            self.scheduler.point()
        with self.lock:
            if self.detector is not None:
                self.detector.fence(order)

    def read(self, obj, field: str, site: str) -> None:
        if self.detector is not None:
            with self.lock:
                self.detector.read(obj, field, site)

    def write(self, obj, field: str, site: str) -> None:
        if self.detector is not None:
            with self.lock:
                self.detector.write(obj, field, site)

    def spin(self) -> None:
        if self.scheduler is not None:
            self.scheduler.spin()
        else:
            time.sleep(0)

    # -- thread lifecycle ------------------------------------------------------
    def fork(self):
        with self.lock:
            return self.detector.fork() if self.detector is not None else None

    def attach(self, token) -> None:
        if self.detector is not None and token is not None:
            with self.lock:
                self.detector.attach(token)

    def detach(self):
        with self.lock:
            return self.detector.detach() if self.detector is not None else None

    def join(self, clock) -> None:
        if self.detector is not None and clock is not None:
            with self.lock:
                self.detector.join(clock)

    def ledger_table(self) -> list[tuple]:
        """Distinct (location, operation, orderings...) triples seen so far."""
        return sorted(self.ledger)


def spawn_threads(runtime, targets, tracer=None):
    """Start one thread per callable, propagating happens-before edges.

    Returns a ``join`` function that waits for all threads, merges their
    clocks back into the caller and re-raises the first exception.
    """
    tracer = tracer if tracer is not None else getattr(runtime, "tracer", None)
    errors = []
    clocks = [None] * len(targets)
    threads = []

    def wrap(i, fn, token):
        if tracer is not None:
            tracer.attach(token)
        try:
            fn()
        except BaseException as exc:  # surfaced by join()
            errors.append(exc)
        finally:
            if tracer is not None:
                clocks[i] = tracer.detach()

    for i, fn in enumerate(targets):
        token = tracer.fork() if tracer is not None else None
        t = threading.Thread(target=wrap, args=(i, fn, token), daemon=True)
        threads.append(t)
    for t in threads:
        t.start()

    def join():
        for t in threads:
            t.join()
        if tracer is not None:
            for c in clocks:
                tracer.join(c)
        if errors:
            raise errors[0]

    return join
