"""k-relaxed concurrent task storage with per-operation memory orderings.

The storage is a linked list of fixed-size blocks forming one global array.
Each thread owns a :class:`Place` with a private priority heap; ``push``
publishes into a random slot among the ``k + 1`` newest positions and
``pop`` claims the best task its heap knows about.
"""
from .atomics import Atomic, MemoryOrder, OrderingError, Runtime
from .block import DataBlock
from .config import StorageConfig
from .item import Strategy, TaskItem, init_item, is_taken, try_take
from .place import EMPTY, FillGuaranteeViolation, PerformanceCounters, Place
from .scheduler import RunStats, Task, Worker, run
from .storage import GlobalTaskStorage

__all__ = ["Atomic", "MemoryOrder", "OrderingError", "Runtime", "DataBlock", "StorageConfig",
           "Strategy", "TaskItem", "init_item", "is_taken", "try_take", "EMPTY",
           "FillGuaranteeViolation", "PerformanceCounters", "Place", "RunStats", "Task", "Worker",
           "run", "GlobalTaskStorage"]
__version__ = "0.1.0"
