from __future__ import annotations

import dataclasses

ORDERING_MODES = ("relaxed", "strict")
HANDSHAKES = ("acquire", "fence")
DEREGISTER_ORDERS = ("relaxed", "acq_rel")


@dataclasses.dataclass(frozen=True)
class StorageConfig:
    """Tuning and verification knobs of one task storage.

    ``tests`` caps the number of slots ``put`` probes per window and defaults
    to ``block_size``, so a window is never abandoned while it still has an
    empty slot.  ``handshake`` selects how block reuse synchronises with the
    last ``deregister``: an acquire load at the start of ``add_block``
    (``"acquire"``) or an acquire fence inside ``is_reusable`` (``"fence"``).
    ``deregister_order`` is the ordering of the ``active_threads`` decrement
    in ``deregister``.  ``"relaxed"`` is the published protocol; ``"acq_rel"``
    additionally orders every place's last reads of a block (and of the items
    it housed) before the block's reuse, which the relaxed decrement does not.
    ``spin_cap`` bounds the re-loads of an empty slot below the tail before
    :class:`~centralk.place.FillGuaranteeViolation` is raised.
    """

    block_size: int = 128
    tests: int | None = None
    ordering: str = "relaxed"
    handshake: str = "acquire"
    seed: int = 0
    deregister_order: str = "relaxed"
    spin_cap: int = 1_000_000

    def __post_init__(self):
        if self.block_size < 1:
            raise ValueError("block_size must be >= 1")
        if self.tests is not None and self.tests < 1:
            raise ValueError("tests must be >= 1")
        if self.ordering not in ORDERING_MODES:
            raise ValueError(f"ordering must be one of {ORDERING_MODES}, got {self.ordering!r}")
        if self.handshake not in HANDSHAKES:
            raise ValueError(f"handshake must be one of {HANDSHAKES}, got {self.handshake!r}")
        if self.deregister_order not in DEREGISTER_ORDERS:
            raise ValueError(f"deregister_order must be one of {DEREGISTER_ORDERS}, "
                             f"got {self.deregister_order!r}")

    @property
    def probe_limit(self) -> int:
        return self.block_size if self.tests is None else self.tests

    def replace(self, **changes) -> "StorageConfig":
        return dataclasses.replace(self, **changes)
