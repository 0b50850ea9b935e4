"""The shared part of the task storage: global tail and first block."""
from __future__ import annotations

from .atomics import Runtime
from .block import DataBlock
from .config import StorageConfig


class GlobalTaskStorage:
    """Global tail index plus the entry block of the linked block list.

    Every index below ``tail`` holds a published item.  ``tail`` only moves
    when a pusher finds a whole relaxation window occupied, so up to ``k + 1``
    of the newest items sit at or above it, visible only to their pushers.
    """

    def __init__(self, num_places: int, config: StorageConfig | None = None,
                 runtime: Runtime | None = None):
        if num_places < 1:
            raise ValueError("num_places must be >= 1")
        self.config = config = config or StorageConfig()
        self.rt = runtime or Runtime(config.ordering)
        if self.rt.ordering != config.ordering:
            raise ValueError("runtime and config disagree on the ordering mode")
        self.num_places = num_places
        self.tail = self.rt.atomic(0, "GlobalTaskStorage.tail")
        self.start_block = self.new_block(owner=0)
        # pre-linked so the first epoch needs no special case
        self.start_block.active_threads.store(num_places, self.rt.mo.relaxed)
        self.start_block.active.store(True, self.rt.mo.relaxed)
        if self.rt.audit is not None:
            self.rt.audit.linked(self.start_block, 0, None)

    def new_block(self, owner: int) -> DataBlock:
        cfg = self.config
        return DataBlock(self.rt, cfg.block_size, cfg.probe_limit, owner=owner,
                         fenced_handshake=cfg.handshake == "fence",
                         release_on_deregister=cfg.deregister_order == "acq_rel")

    def advance_tail(self, cur_tail: int) -> None:
        """Move the tail forward to ``cur_tail``; never moves it back."""
        mo = self.rt.mo
        tail = self.tail
        nold_tail = tail.load(mo.relaxed)
        diff = cur_tail - nold_tail
        while diff > 0:
            ok, nold_tail = tail.compare_exchange_weak(nold_tail, cur_tail, mo.release, mo.relaxed)
            if ok:
                audit = self.rt.audit
                if audit is not None:
                    audit.tail_stored(nold_tail, cur_tail)
                break
            diff = cur_tail - nold_tail

    def observe_tail(self) -> int:
        return self.tail.load(self.rt.mo.acquire)
