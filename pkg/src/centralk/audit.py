"""Shadow bookkeeping of block lifecycles, publications and tail stores.

Test-only; nothing in the algorithm reads it.  Counts are kept in per-thread
shards and merged on access, so recording costs no shared lock.  With
``keep_events`` every record additionally goes through one lock, which
makes the event log a linearisation of what the threads did.
"""
from __future__ import annotations

import collections
import threading


class _Shard:
    __slots__ = ("publications", "cleanups", "links", "deregistrations", "tail_stores", "max_spin")

    def __init__(self):
        self.publications = collections.Counter()  # global index -> count
        self.cleanups = collections.Counter()      # (block uid, epoch) -> count
        self.links = collections.Counter()         # (block uid, epoch) -> count
        self.deregistrations = collections.Counter()  # (place, block uid, epoch) -> count
        self.tail_stores = []  # (old, new) of every successful tail CAS
        self.max_spin = 0


def _merged(name):
    def get(self):
        total = collections.Counter()
        for shard in list(self._shards):
            total.update(getattr(shard, name))
        return total
    return property(get)


class Audit:
    def __init__(self, keep_events: bool = True):
        self._lock = threading.Lock()
        self._local = threading.local()
        self._shards = []
        self.keep_events = keep_events
        self.events = []
        self.blocks = {}

    def _shard(self) -> _Shard:
        shard = getattr(self._local, "shard", None)
        if shard is None:
            shard = self._local.shard = _Shard()
            with self._lock:
                self._shards.append(shard)
        return shard

    def _event(self, *ev):
        if self.keep_events:
            with self._lock:
                self.events.append(ev)

    publications = _merged("publications")
    cleanups = _merged("cleanups")
    links = _merged("links")
    deregistrations = _merged("deregistrations")

    @property
    def tail_stores(self) -> list:
        return [pair for shard in list(self._shards) for pair in shard.tail_stores]

    @property
    def max_spin(self) -> int:
        return max((s.max_spin for s in list(self._shards)), default=0)

    def published(self, block, epoch, index):
        self._shard().publications[index] += 1
        self._event("publish", block.uid, epoch, index)

    def linked(self, block, epoch, pred):
        self.blocks[block.uid] = block
        self._shard().links[(block.uid, epoch)] += 1
        self._event("link", block.uid, epoch, None if pred is None else pred.uid)

    def cleaned(self, block, epoch):
        self._shard().cleanups[(block.uid, epoch)] += 1
        self._event("cleanup", block.uid, epoch)

    def deregistered(self, place_id, block, epoch):
        self._shard().deregistrations[(place_id, block.uid, epoch)] += 1
        self._event("deregister", place_id, block.uid, epoch)

    def tail_stored(self, old, new):
        self._shard().tail_stores.append((old, new))
        self._event("tail", old, new)

    def tail_chain_problems(self, final_tail: int) -> list[str]:
        """The successful tail CASes must chain 0 -> ... -> final_tail upwards.

        Each CAS replaced the value it observed, so the (old, new) pairs are
        the modification order of the tail regardless of logging order.
        """
        stores = self.tail_stores
        problems = [f"tail CAS {old} -> {new} does not increase" for old, new in stores if new <= old]
        succ = {}
        for old, new in stores:
            if old in succ:
                problems.append(f"two tail CASes replaced the value {old}")
            succ[old] = new
        value, steps = 0, 0
        while value in succ and steps <= len(succ):
            value = succ[value]
            steps += 1
        if value != final_tail or steps != len(succ):
            problems.append(f"tail CAS chain from 0 ends at {value} after {steps} of "
                            f"{len(succ)} stores; final tail is {final_tail}")
        return problems

    def spun(self, count):
        shard = self._shard()
        if count > shard.max_spin:
            shard.max_spin = count
