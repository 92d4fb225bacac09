"""Replica fan-out with worker-count-independent results.

The replica range is cut into contiguous blocks, one per worker, and the
per-replica outputs are concatenated back in replica order.  Each replica draws
all of its randomness from its own oracle, so the output does not depend on how
the range was split.
"""

from __future__ import annotations

import multiprocessing as mp
import os
from concurrent.futures import ProcessPoolExecutor
from typing import Callable, Sequence

WORKERS_ENV = "HALFPLANE_FPP_WORKERS"


def default_workers() -> int:
    try:
        return max(1, int(os.environ.get(WORKERS_ENV, "1")))
    except ValueError:
        return 1


def blocks(items: Sequence, workers: int) -> list[Sequence]:
    n = len(items)
    workers = max(1, min(workers, n)) if n else 1
    base, extra = divmod(n, workers)
    out, start = [], 0
    for w in range(workers):
        size = base + (1 if w < extra else 0)
        out.append(items[start:start + size])
        start += size
    return out


def _run_block(fn: Callable, block: Sequence) -> list:
    return [fn(r) for r in block]


def map_replicas(fn: Callable, replicas: Sequence[int], workers: int | None = None) -> list:
    """``[fn(r) for r in replicas]``, optionally spread over worker processes."""
    replicas = list(replicas)
    workers = default_workers() if workers is None else workers
    if workers <= 1 or len(replicas) <= 1:
        return [fn(r) for r in replicas]
    parts = blocks(replicas, workers)
    ctx = mp.get_context("spawn")
    with ProcessPoolExecutor(max_workers=len(parts), mp_context=ctx) as pool:
        futures = [pool.submit(_run_block, fn, p) for p in parts]
        out = []
        for f in futures:
            out.extend(f.result())
    return out
