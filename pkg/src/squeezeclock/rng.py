"""Seeded random streams.

Every simulation takes one master seed. Independent streams are derived by a
counter-based rule: the stream for key ``(k0, k1, ...)`` is
``PCG64(SeedSequence(seed, spawn_key=(k0, k1, ...)))``. A stream depends only
on the master seed and its key, never on execution order or thread count, so
chunked or parallel execution reproduces serial results bit for bit.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor

import numpy as np

#: Trials per chunk in chunked Monte Carlo loops. Fixed so that results do not
#: depend on the number of worker threads.
CHUNK_SIZE = 4096


def stream(seed: int, *key: int) -> np.random.Generator:
    """Generator for stream ``key`` under master ``seed``."""
    if seed is None:
        raise ValueError("a seed is required; wall-clock seeding is not supported")
    ss = np.random.SeedSequence(int(seed), spawn_key=tuple(int(k) for k in key))
    return np.random.Generator(np.random.PCG64(ss))


def chunk_bounds(n: int, chunk: int = CHUNK_SIZE):
    return [(i, min(i + chunk, n)) for i in range(0, n, chunk)]


def map_ordered(fn, items, threads: int = 1):
    """``[fn(x) for x in items]``, optionally on a thread pool, in input order."""
    items = list(items)
    if threads is None or threads <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))
