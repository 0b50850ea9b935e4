"""Task items and the position/orig_position taken-marking protocol.

An item is *taken* once its atomic ``position`` differs from the immutable
``orig_position``.  Taking is a single strong compare-exchange from
``orig_position`` to ``orig_position + 1``; every access to ``position`` is
relaxed because nothing else is published through it.
"""
from __future__ import annotations

from typing import NamedTuple


class Strategy(NamedTuple):
    """Scheduling metadata: a numeric priority (larger runs first) and k."""

    priority: float
    k: int = 0


class TaskItem:
    __slots__ = ("strategy", "payload", "orig_position", "position", "owner",
                 "epoch", "block", "block_epoch", "_rt")

    def __init__(self, runtime):
        self._rt = runtime
        self.strategy = None
        self.payload = None
        self.orig_position = None
        self.position = runtime.atomic(None, "TaskItem.position")
        self.owner = None
        # reuse generation, only read by tests and the audit
        self.epoch = 0
        # housing block and its cleanup count at publication, for the pool
        self.block = None
        self.block_epoch = -1

    def __repr__(self):
        return (f"<TaskItem owner={self.owner} orig={self.orig_position} "
                f"epoch={self.epoch} payload={self.payload!r}>")

    def init(self, strategy: Strategy, payload, owner: int) -> None:
        if strategy.k < 0:
            raise ValueError("k must be non-negative")
        tr = self._rt.tracer
        if tr is not None:
            tr.write(self, "strategy", "init_item")
            tr.write(self, "payload", "init_item")
            tr.write(self, "owner", "init_item")
        self.strategy = strategy
        self.payload = payload
        self.owner = owner
        self.block = None
        self.epoch += 1

    def try_take(self, orig_position=None) -> bool:
        """Claim the item; true for exactly one caller per publication.

        ``orig_position`` may be passed from a snapshot taken when the item
        was read out of its slot, which keeps stale heap entries from
        claiming a later reuse of the same item.
        """
        if orig_position is None:
            orig_position = self.orig_position
        mo = self._rt.mo
        ok, _ = self.position.compare_exchange_strong(
            orig_position, orig_position + 1, mo.relaxed, mo.relaxed)
        return ok

    def is_taken(self, orig_position=None) -> bool:
        if orig_position is None:
            orig_position = self.orig_position
        return self.position.load(self._rt.mo.relaxed) != orig_position


def init_item(item: TaskItem, strategy: Strategy, payload, owner: int) -> None:
    item.init(strategy, payload, owner)


def try_take(item: TaskItem) -> bool:
    return item.try_take()


def is_taken(item: TaskItem) -> bool:
    return item.is_taken()
