"""Atomic cells with explicit memory orderings.

CPython gives no control over hardware ordering, so the orderings passed to
these cells do not change what the fast path does.  They are carried through
every call so that a :class:`~centralk.tracing.Tracer` can check them: the
race detector turns them into happens-before edges and the ordering ledger
records which ordering every access site used.
"""
from __future__ import annotations

import enum
import threading
import time

__all__ = [
    "MemoryOrder",
    "RELAXED",
    "ACQUIRE",
    "RELEASE",
    "ACQ_REL",
    "SEQ_CST",
    "Orderings",
    "RELAXED_ORDERINGS",
    "STRICT_ORDERINGS",
    "Atomic",
    "TracedAtomic",
    "Runtime",
    "OrderingError",
]


class MemoryOrder(enum.IntEnum):
    RELAXED = 0
    ACQUIRE = 2
    RELEASE = 3
    ACQ_REL = 4
    SEQ_CST = 5

    @property
    def acquires(self) -> bool:
        return self in (MemoryOrder.ACQUIRE, MemoryOrder.ACQ_REL, MemoryOrder.SEQ_CST)

    @property
    def releases(self) -> bool:
        return self in (MemoryOrder.RELEASE, MemoryOrder.ACQ_REL, MemoryOrder.SEQ_CST)


RELAXED = MemoryOrder.RELAXED
ACQUIRE = MemoryOrder.ACQUIRE
RELEASE = MemoryOrder.RELEASE
ACQ_REL = MemoryOrder.ACQ_REL
SEQ_CST = MemoryOrder.SEQ_CST


class OrderingError(ValueError):
    """An ordering that C++11 forbids for the requested operation."""


class Orderings:
    """The ordering vocabulary an algorithm is written against.

    Algorithm code asks for ``mo.acquire`` rather than ``ACQUIRE``; the strict
    instance maps every name to ``SEQ_CST`` and turns on the explicit full
    fence in ``DataBlock.deregister``.  That keeps the relaxed and strict
    builds the same code path with different orderings substituted.
    """

    __slots__ = ("name", "relaxed", "acquire", "release", "acq_rel", "seq_cst", "strict")

    def __init__(self, name: str, strict: bool):
        self.name = name
        self.strict = strict
        if strict:
            self.relaxed = self.acquire = self.release = self.acq_rel = SEQ_CST
        else:
            self.relaxed, self.acquire, self.release = RELAXED, ACQUIRE, RELEASE
            self.acq_rel = ACQ_REL
        self.seq_cst = SEQ_CST

    def __repr__(self):
        return f"Orderings({self.name!r})"


RELAXED_ORDERINGS = Orderings("relaxed", strict=False)
STRICT_ORDERINGS = Orderings("strict", strict=True)


def orderings_for(mode: str) -> Orderings:
    if mode == "relaxed":
        return RELAXED_ORDERINGS
    if mode == "strict":
        return STRICT_ORDERINGS
    raise ValueError(f"unknown ordering mode {mode!r} (expected 'relaxed' or 'strict')")


class Atomic:
    """A single atomic memory location.

    Loads and stores are plain attribute accesses (atomic under the GIL);
    read-modify-write operations take a per-cell lock.  ``compare_exchange_*``
    return ``(succeeded, observed)`` where *observed* is the value found in
    the cell, which is what C++ writes back into ``expected``.
    """

    __slots__ = ("_value", "_lock", "name")

    def __init__(self, value=None, name: str = ""):
        self._value = value
        self._lock = threading.Lock()
        self.name = name

    def __repr__(self):
        return f"<Atomic {self.name or '?'}={self._value!r}>"

    def load(self, order: MemoryOrder = SEQ_CST):
        return self._value

    def store(self, value, order: MemoryOrder = SEQ_CST) -> None:
        self._value = value

    def compare_exchange_strong(self, expected, desired,
                                success: MemoryOrder = SEQ_CST,
                                failure: MemoryOrder = SEQ_CST):
        with self._lock:
            current = self._value
            if current == expected:
                self._value = desired
                return True, current
            return False, current

    # no spurious failures outside of a tracer
    compare_exchange_weak = compare_exchange_strong

    def fetch_add(self, delta, order: MemoryOrder = SEQ_CST):
        with self._lock:
            old = self._value
            self._value = old + delta
            return old

    def fetch_sub(self, delta, order: MemoryOrder = SEQ_CST):
        with self._lock:
            old = self._value
            self._value = old - delta
            return old


def _check_load(order):
    if order.releases and order is not SEQ_CST:
        raise OrderingError(f"load cannot use {order.name}")


def _check_store(order):
    if order.acquires and order is not SEQ_CST:
        raise OrderingError(f"store cannot use {order.name}")


def _check_cas(success, failure):
    if failure in (RELEASE, ACQ_REL):
        raise OrderingError(f"compare_exchange failure order cannot be {failure.name}")


class TracedAtomic(Atomic):
    """An :class:`Atomic` that reports every access to a tracer.

    All traced accesses are serialized on the tracer's lock, which makes the
    observed execution sequentially consistent; the detector layered on top
    decides which of those accesses are ordered by happens-before.
    """

    __slots__ = ("_tracer",)

    def __init__(self, value, name, tracer):
        super().__init__(value, name)
        self._tracer = tracer

    def load(self, order: MemoryOrder = SEQ_CST):
        _check_load(order)
        tr = self._tracer
        tr.point(self, "load", order)
        with tr.lock:
            value = self._value
            tr.on_load(self, order)
            return value

    def store(self, value, order: MemoryOrder = SEQ_CST) -> None:
        _check_store(order)
        tr = self._tracer
        tr.point(self, "store", order)
        with tr.lock:
            self._value = value
            tr.on_store(self, order)

    def _cas(self, op, expected, desired, success, failure, weak):
        _check_cas(success, failure)
        tr = self._tracer
        tr.point(self, op, success, failure)
        with tr.lock:
            current = self._value
            if current == expected and not (weak and tr.spurious_failure(self)):
                self._value = desired
                tr.on_rmw(self, success)
                return True, current
            tr.on_load(self, failure)
            return False, current

    def compare_exchange_strong(self, expected, desired, success=SEQ_CST, failure=SEQ_CST):
        return self._cas("cas_strong", expected, desired, success, failure, weak=False)

    def compare_exchange_weak(self, expected, desired, success=SEQ_CST, failure=SEQ_CST):
        return self._cas("cas_weak", expected, desired, success, failure, weak=True)

    def fetch_add(self, delta, order: MemoryOrder = SEQ_CST):
        tr = self._tracer
        tr.point(self, "fetch_add", order)
        with tr.lock:
            old = self._value
            self._value = old + delta
            tr.on_rmw(self, order)
            return old

    def fetch_sub(self, delta, order: MemoryOrder = SEQ_CST):
        tr = self._tracer
        tr.point(self, "fetch_sub", order)
        with tr.lock:
            old = self._value
            self._value = old - delta
            tr.on_rmw(self, order)
            return old


class Runtime:
    """Factory for atomics plus the hooks shared by one storage instance.

    ``tracer`` (optional) receives every atomic access, fence, plain field
    access and spin; ``audit`` (optional) receives shadow lifecycle events.
    Both are ``None`` on the measured path.
    """

    def __init__(self, ordering: str = "relaxed", tracer=None, audit=None):
        self.mo = orderings_for(ordering)
        self.tracer = tracer
        self.audit = audit

    @property
    def ordering(self) -> str:
        return self.mo.name

    def atomic(self, value=None, name: str = "") -> Atomic:
        if self.tracer is None:
            return Atomic(value, name)
        return TracedAtomic(value, name, self.tracer)

    def fence(self, order: MemoryOrder) -> None:
        if self.tracer is not None:
            self.tracer.fence(order)

    def spin(self) -> None:
        """Called from every spin-wait iteration."""
        if self.tracer is not None:
            self.tracer.spin()
        else:
            # give the GIL away so the thread we wait for can run
            time.sleep(0)
