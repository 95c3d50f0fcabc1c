"""Counter-based random streams and order-independent batch maps.

Monte-Carlo work is cut into fixed-size batches.  Batch ``b`` of a run seeded
with ``seed`` draws from ``SeedSequence(seed, spawn_key=(b,))``, so its numbers
depend only on (seed, b) and never on which worker ran it or when.  Results
are collected by batch index and reduced in that order, which keeps totals
bit-identical for any worker count.
"""
from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, TypeVar

import numpy as np

T = TypeVar("T")

BATCH = 8192


def stream(seed: int, index: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(int(seed), spawn_key=(int(index),)))


def worker_count(default: int = 1) -> int:
    raw = os.environ.get("QLECTRA_THREADS")
    if not raw:
        return default
    try:
        return max(1, int(raw))
    except ValueError:
        return default


def batch_sizes(total: int, batch: int = BATCH) -> list[int]:
    full, rem = divmod(int(total), batch)
    return [batch] * full + ([rem] if rem else [])


def map_batches(fn: Callable[[int, int, np.random.Generator], T], total: int, seed: int,
                workers: int | None = None, batch: int = BATCH) -> list[T]:
    """Call fn(index, size, rng) for each batch; results in batch order."""
    sizes = batch_sizes(total, batch)
    workers = worker_count() if workers is None else max(1, int(workers))
    jobs = [(b, s) for b, s in enumerate(sizes)]
    if workers == 1 or len(jobs) <= 1:
        return [fn(b, s, stream(seed, b)) for b, s in jobs]
    with ThreadPoolExecutor(max_workers=workers) as ex:
        return list(ex.map(lambda job: fn(job[0], job[1], stream(seed, job[0])), jobs))
