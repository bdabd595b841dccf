"""Counter-based random streams.

Every stream is a Philox generator keyed by a ``SeedSequence`` built from a
master seed plus a tuple of integer identifiers (stream id, replication
index, cell index, ...). Two calls with the same key produce the same
numbers no matter which thread runs them or in which order.
"""

from __future__ import annotations

import secrets
from collections.abc import Callable, Iterable, Sequence
from concurrent.futures import ThreadPoolExecutor
from typing import TypeVar

import numpy as np

T = TypeVar("T")
R = TypeVar("R")

SEED_MASK = (1 << 64) - 1


def stream(seed: int, *key: int) -> np.random.Generator:
    """Return the generator for ``(seed, *key)``."""
    ss = np.random.SeedSequence(int(seed) & SEED_MASK, spawn_key=tuple(int(k) for k in key))
    return np.random.Generator(np.random.Philox(ss))


def fresh_seed() -> int:
    """Draw a 64-bit seed from system entropy."""
    return secrets.randbits(64)


def parallel_map(fn: Callable[[T], R], items: Iterable[T], workers: int = 1) -> list[R]:
    """Map ``fn`` over ``items`` preserving order.

    Results depend only on the items, so the output is identical for any
    ``workers`` value as long as ``fn`` derives its randomness from its
    argument.
    """
    items = list(items)
    if workers <= 1 or len(items) <= 1:
        return [fn(it) for it in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


def chunked(n: int, size: int) -> Sequence[range]:
    return [range(lo, min(lo + size, n)) for lo in range(0, n, size)]
