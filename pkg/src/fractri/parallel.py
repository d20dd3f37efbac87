"""Thread-pool helper shared by the sampling-heavy routines.

numpy releases the GIL inside its kernels, so plain threads give a useful
speed-up for chunked vectorised work without pickling models across processes.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Sequence, TypeVar

T = TypeVar("T")
R = TypeVar("R")

THREADS_ENV = "FRACTRI_THREADS"


def worker_count() -> int:
    """Threads to use: ``FRACTRI_THREADS`` if set to a positive integer, else the CPU count."""
    raw = os.environ.get(THREADS_ENV, "0").strip() or "0"
    try:
        requested = int(raw)
    except ValueError:
        raise ValueError(f"{THREADS_ENV} must be an integer, got {raw!r}") from None
    if requested < 0:
        raise ValueError(f"{THREADS_ENV} must be >= 0")
    if requested:
        return requested
    if hasattr(os, "sched_getaffinity"):
        return len(os.sched_getaffinity(0)) or 1
    return os.cpu_count() or 1


def map_chunks(func: Callable[[T], R], chunks: Sequence[T]) -> list[R]:
    """``[func(c) for c in chunks]`` evaluated on the shared thread budget, order preserved."""
    workers = min(worker_count(), len(chunks))
    if workers <= 1:
        return [func(c) for c in chunks]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(func, chunks))
