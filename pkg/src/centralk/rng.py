"""Named, independent random streams derived from one user seed.

Each stream is keyed by ``(seed, purpose, *keys)`` through numpy's
``SeedSequence``, so the graph generator and the per-place slot draws never
share state.  Bulk draws (graph generation) use the counter-based Philox
bit generator; the per-push slot draws use :class:`random.Random`, which is
several times cheaper per scalar call.
"""
from __future__ import annotations

import random
import zlib

import numpy as np

GRAPH_GENERATOR_VERSION = "philox-rowwise-v1"


def _purpose_key(purpose: str) -> int:
    return zlib.crc32(purpose.encode())


def seed_sequence(seed: int, purpose: str, *keys: int) -> np.random.SeedSequence:
    return np.random.SeedSequence([int(seed), _purpose_key(purpose), *map(int, keys)])


def philox(seed: int, purpose: str, *keys: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(seed_sequence(seed, purpose, *keys)))


def py_random(seed: int, purpose: str, *keys: int) -> random.Random:
    state = seed_sequence(seed, purpose, *keys).generate_state(2, np.uint64)
    return random.Random(int(state[0]) << 64 | int(state[1]))
