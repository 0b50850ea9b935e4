"""Per-thread access point to the k-relaxed task storage.

A place owns a local priority heap, its head index into the global array,
cached head/tail blocks and pools for the items and blocks it allocates.
Only the owning thread may call its methods; all cross-thread traffic goes
through the storage tail, block atomics and item positions.
"""
from __future__ import annotations

import collections
import dataclasses
import heapq
import itertools

from .item import Strategy, TaskItem
from .rng import py_random
from .storage import GlobalTaskStorage


class _Empty:
    __slots__ = ()

    def __repr__(self):
        return "EMPTY"

    def __bool__(self):
        return False


EMPTY = _Empty()
"""Returned by :meth:`Place.pop` when this place sees no task right now."""


class FillGuaranteeViolation(AssertionError):
    """A slot below the observed tail stayed empty for ``spin_cap`` reloads."""


@dataclasses.dataclass
class PerformanceCounters:
    pushes: int = 0
    pops: int = 0
    pop_empties: int = 0
    slot_probe_failures: int = 0
    blocks_linked: int = 0
    blocks_reused: int = 0
    # taken entries dropped by pop or by heap compaction
    heap_discards: int = 0

    def __add__(self, other: "PerformanceCounters") -> "PerformanceCounters":
        return PerformanceCounters(*(a + b for a, b in zip(dataclasses.astuple(self),
                                                            dataclasses.astuple(other))))


class StrategyHeap:
    """Max-heap of pending items keyed by strategy priority.

    Entries snapshot ``orig_position`` and the payload when the item is read
    from its slot, so popping never touches the item's plain fields again.
    Ties pop in insertion order.  Taken items are dropped lazily.
    """

    __slots__ = ("_heap", "_seq", "_compact_at")

    def __init__(self):
        self._heap = []
        self._seq = itertools.count()
        self._compact_at = 1024

    def __len__(self):
        return len(self._heap)

    def push(self, priority, orig_position, item, payload) -> None:
        heapq.heappush(self._heap, (-priority, next(self._seq), orig_position, item, payload))

    def pop(self):
        """Remove and return ``(orig_position, item, payload)`` or None."""
        if not self._heap:
            return None
        _, _, orig, item, payload = heapq.heappop(self._heap)
        return orig, item, payload

    def peek_priority(self):
        return -self._heap[0][0] if self._heap else None

    def maybe_compact(self, relaxed) -> int:
        """Drop entries already taken elsewhere once the heap has doubled.

        Only the atomic position is read, against the snapshot, so this is
        safe for items that have since been reused.  Returns the number of
        dropped entries.
        """
        heap = self._heap
        if len(heap) < self._compact_at:
            return 0
        live = [e for e in heap if e[3].position.load(relaxed) == e[2]]
        dropped = len(heap) - len(live)
        heapq.heapify(live)
        self._heap = live
        self._compact_at = max(1024, 2 * len(live))
        return dropped


class Place:
    def __init__(self, storage: GlobalTaskStorage, place_id: int):
        if not 0 <= place_id < storage.num_places:
            raise ValueError(f"place id {place_id} outside [0, {storage.num_places})")
        self.id = place_id
        self.storage = storage
        self.rt = storage.rt
        self.block_size = storage.config.block_size
        self.spin_cap = storage.config.spin_cap
        self.head = 0
        self.head_block = storage.start_block
        self.tail_block = storage.start_block
        self.heap = StrategyHeap()
        self.item_pool = collections.deque()
        self.block_pool = [storage.start_block] if place_id == 0 else []
        self.counters = PerformanceCounters()
        self._random = py_random(storage.config.seed, "put", place_id).random

    def __repr__(self):
        return f"<Place {self.id} head={self.head} heap={len(self.heap)}>"

    def _rand_int(self, n: int) -> int:
        # uniform on [0, n]; float granularity is far below any window size
        return int(self._random() * (n + 1)) if n else 0

    # -- pools ---------------------------------------------------------------
    def acquire_item(self) -> TaskItem:
        """A pooled item that nobody can still claim, or a fresh one.

        An item is reusable once it is taken and the block that housed it
        has been cleaned since it was published there.
        """
        pool = self.item_pool
        mo = self.rt.mo
        for _ in range(min(2, len(pool))):
            item = pool[0]
            if (item.position.load(mo.relaxed) != item.orig_position
                    and item.block.cleanups.load(mo.acquire) != item.block_epoch):
                pool.popleft()
                return item
            pool.rotate(-1)
        return TaskItem(self.rt)

    def acquire_block(self):
        """A block from this place's pool that is free for relinking, or a new one."""
        for block in self.block_pool:
            if block.check_reusable():
                self.counters.blocks_reused += 1
                return block
        block = self.storage.new_block(owner=self.id)
        self.block_pool.append(block)
        return block

    # -- push ----------------------------------------------------------------
    def _successor(self, block):
        mo = self.rt.mo
        nxt = block.next.load(mo.acquire)
        if nxt is None:
            fresh = self.acquire_block()
            if block.add_block(fresh, self.storage.num_places):
                self.counters.blocks_linked += 1
                return fresh
            nxt = block.next.load(mo.acquire)
        return nxt

    def push(self, strategy: Strategy, payload) -> None:
        item = self.acquire_item()
        item.init(strategy, payload, self.id)
        storage = self.storage
        size = self.block_size
        cur_tail = storage.tail.load(self.rt.mo.relaxed)
        block = self.tail_block
        offset = block.read_offset("push")
        if cur_tail < offset:
            raise AssertionError(f"tail {cur_tail} behind cached tail block at {offset}")
        while cur_tail >= offset + size:
            block = self._successor(block)
            offset = block.read_offset("push")
        while True:
            ok, cur_tail = block.put(cur_tail, item, self._rand_int)
            if ok:
                break
            self.counters.slot_probe_failures += 1
            block = self._successor(block)
        self.tail_block = block
        storage.advance_tail(cur_tail)
        self.item_pool.append(item)
        self.heap.push(strategy.priority, item.orig_position, item, payload)
        self.counters.pushes += 1

    # -- consume -------------------------------------------------------------
    def _leave_head_block(self) -> bool:
        """Deregister the head block and step to its successor, if linked."""
        old = self.head_block
        nxt = old.next.load(self.rt.mo.acquire)
        if nxt is None:
            return False
        self.head_block = nxt
        if self.tail_block is old:
            self.tail_block = nxt
        audit = self.rt.audit
        if audit is not None:
            audit.deregistered(self.id, old, old.cleanups.load(self.rt.mo.relaxed))
        old.deregister()
        return True

    def deregister_old_blocks(self) -> None:
        size = self.block_size
        while self.head >= self.head_block.read_offset("deregister_old_blocks") + size:
            if not self._leave_head_block():
                break

    def update_heap(self) -> None:
        mo = self.rt.mo
        acquire, relaxed = mo.acquire, mo.relaxed
        tr = self.rt.tracer
        tail = self.storage.observe_tail()
        head = self.head
        size = self.block_size
        my_id = self.id
        heap_push = self.heap.push
        block = self.head_block
        base = block.read_offset("update_heap")
        slots = block.slots
        while head < tail:
            if head >= base + size:
                self.head = head
                self.deregister_old_blocks()
                block = self.head_block
                base = block.read_offset("update_heap")
                slots = block.slots
                if head >= base + size:
                    raise AssertionError(f"place {self.id}: no block linked after index {head} "
                                         f"although tail is {tail}")
            slot = slots[head - base]
            item = slot.load(acquire)
            if item is None:
                item = self._spin_on_slot(slot, head)
            if tr is not None:
                tr.read(item, "owner", "update_heap")
            if item.owner != my_id:
                if tr is not None:
                    tr.read(item, "orig_position", "update_heap")
                    tr.read(item, "strategy", "update_heap")
                    tr.read(item, "payload", "update_heap")
                orig = item.orig_position
                if item.position.load(relaxed) == orig:
                    heap_push(item.strategy.priority, orig, item, item.payload)
            head += 1
        self.head = head
        self.deregister_old_blocks()
        self.counters.heap_discards += self.heap.maybe_compact(relaxed)

    def _spin_on_slot(self, slot, index):
        mo = self.rt.mo
        spins = 0
        item = None
        while item is None:
            spins += 1
            if spins > self.spin_cap:
                raise FillGuaranteeViolation(
                    f"place {self.id}: slot {index} below tail still empty after {spins - 1} reloads")
            self.rt.spin()
            item = slot.load(mo.acquire)
        audit = self.rt.audit
        if audit is not None:
            audit.spun(spins)
        return item

    def pop(self):
        """Return the payload of a claimed task, or :data:`EMPTY`."""
        self.update_heap()
        heap = self.heap
        retried = False
        while True:
            entry = heap.pop()
            if entry is None:
                if retried:
                    self.counters.pop_empties += 1
                    return EMPTY
                retried = True
                self.update_heap()
                continue
            orig, item, payload = entry
            if item.try_take(orig):
                self.counters.pops += 1
                return payload
            self.counters.heap_discards += 1
