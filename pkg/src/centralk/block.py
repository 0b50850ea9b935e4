"""One segment of the global task array.

The global array is a singly linked list of fixed-size blocks.  A block is
shared by every place while it is linked; each place gives it up once with
:meth:`DataBlock.deregister`, and the last one cleans it so that the owning
place can relink it later (:meth:`DataBlock.is_reusable`,
:meth:`DataBlock.add_block`).

Orderings, per access site:

====================  ==========================  ==========================
location              operation                   ordering
====================  ==========================  ==========================
slot                  probe load in ``put``       relaxed
slot                  publish CAS in ``put``      release / relaxed, strong
slot                  cleanup store               relaxed
next                  link CAS in ``add_block``   release / relaxed, weak
next                  load in ``add_block``       relaxed
next                  reset in ``deregister``     relaxed
active                load in ``add_block``       acquire (acquire handshake)
active                stores in ``add_block``     relaxed
active                load in ``is_reusable``     relaxed (+ acquire fence)
active                store in ``deregister``     release
active_threads        all accesses                relaxed (decrement
                                                  acq_rel if configured)
====================  ==========================  ==========================
"""
from __future__ import annotations

import itertools

_uids = itertools.count()


class DataBlock:
    __slots__ = ("slots", "offset", "next", "active_threads", "active", "cleanups",
                 "size", "tests", "owner", "uid", "fenced_handshake", "_release_on_deregister", "_rt")

    def __init__(self, runtime, size: int, tests: int | None = None, owner: int | None = None,
                 fenced_handshake: bool = False, release_on_deregister: bool = False):
        atomic = runtime.atomic
        self._rt = runtime
        self.size = size
        self.tests = size if tests is None else tests
        self.owner = owner
        self.uid = next(_uids)
        self.fenced_handshake = fenced_handshake
        self._release_on_deregister = release_on_deregister
        self.slots = [atomic(None, "DataBlock.slot") for _ in range(size)]
        self.offset = 0
        self.next = atomic(None, "DataBlock.next")
        self.active_threads = atomic(0, "DataBlock.active_threads")
        self.active = atomic(False, "DataBlock.active")
        # completed cleanups; item reuse waits for this to move past the
        # value recorded at publication
        self.cleanups = atomic(0, "DataBlock.cleanups")

    def __repr__(self):
        return f"<DataBlock uid={self.uid} owner={self.owner} offset={self.offset}>"

    def read_offset(self, site: str) -> int:
        tr = self._rt.tracer
        if tr is not None:
            tr.read(self, "offset", site)
        return self.offset

    def put(self, cur_tail: int, item, rand_int) -> tuple[bool, int]:
        """Try to publish ``item`` in the window(s) starting at ``cur_tail``.

        ``rand_int(n)`` returns a uniform integer in ``[0, n]``.  Returns
        ``(True, base)`` with ``base`` the window base at which the item was
        published, or ``(False, end)`` with ``end`` the first index past this
        block once every window from ``cur_tail`` on was found full.
        """
        mo = self._rt.mo
        relaxed, release = mo.relaxed, mo.release
        tr = self._rt.tracer
        size = self.size
        k = item.strategy.k
        offset = self.read_offset("put")
        array_offset = cur_tail - offset
        if array_offset < 0:
            raise ValueError(f"cur_tail {cur_tail} precedes block offset {offset}")
        slots = self.slots
        while array_offset < size:
            cur_k = min(k, size - array_offset - 1)
            to_add = rand_int(cur_k)
            i_limit = to_add + min(self.tests, cur_k + 1)
            for i in range(to_add, i_limit):
                wrapped_i = i % (cur_k + 1)
                elem = slots[array_offset + wrapped_i]
                if elem.load(relaxed) is None:
                    position = cur_tail + wrapped_i
                    if tr is not None:
                        tr.write(item, "orig_position", "put")
                    item.orig_position = position
                    item.position.store(position, relaxed)
                    ok, _ = elem.compare_exchange_strong(None, item, release, relaxed)
                    if ok:
                        item.block = self
                        item.block_epoch = self.cleanups.load(relaxed)
                        audit = self._rt.audit
                        if audit is not None:
                            audit.published(self, item.block_epoch, position)
                        return True, cur_tail
            cur_tail += cur_k + 1
            array_offset = cur_tail - offset
        return False, cur_tail

    def add_block(self, block: "DataBlock", num_places: int) -> bool:
        """Link ``block`` after this one.  False if another thread won the race."""
        mo = self._rt.mo
        if not block.fenced_handshake:
            # synchronize-with the release store of active in deregister()
            block.active.load(mo.acquire)
        block.active_threads.store(num_places, mo.relaxed)
        block.active.store(True, mo.relaxed)

        tr = self._rt.tracer
        if tr is not None:
            tr.write(block, "offset", "add_block")
        block.offset = self.read_offset("add_block") + self.size
        audit = self._rt.audit
        epoch = block.cleanups.load(mo.relaxed) if audit is not None else None
        next_block = self.next.load(mo.relaxed)
        while next_block is None:
            ok, next_block = self.next.compare_exchange_weak(None, block, mo.release, mo.relaxed)
            if ok:
                if audit is not None:
                    audit.linked(block, epoch, self)
                return True
        # another thread linked first; our block goes back to the pool
        block.active.store(False, mo.relaxed)
        return False

    def deregister(self) -> bool:
        """Drop one place's reference; the last caller cleans the block.

        Returns True for the caller that performed the cleanup.
        """
        mo = self._rt.mo
        old = self.active_threads.fetch_sub(
            1, mo.acq_rel if self._release_on_deregister else mo.relaxed)
        if old == 1:
            self._cleanup()
            self.next.store(None, mo.relaxed)
            if mo.strict:
                self._rt.fence(mo.seq_cst)
            self.active.store(False, mo.release)
            return True
        if old < 1:
            raise RuntimeError(f"block {self.uid} deregistered more often than it has places")
        return False

    def _cleanup(self) -> None:
        mo = self._rt.mo
        for slot in self.slots:
            slot.store(None, mo.relaxed)
        epoch = self.cleanups.load(mo.relaxed)
        audit = self._rt.audit
        if audit is not None:
            audit.cleaned(self, epoch)
        # taken items housed here become reusable by their owners
        self.cleanups.store(epoch + 1, mo.release)

    def is_reusable(self) -> bool:
        return not self.active.load(self._rt.mo.relaxed)

    def is_reusable_fenced(self) -> bool:
        mo = self._rt.mo
        result = not self.active.load(mo.relaxed)
        if result:
            self._rt.fence(mo.acquire)
        return result

    def check_reusable(self) -> bool:
        return self.is_reusable_fenced() if self.fenced_handshake else self.is_reusable()
