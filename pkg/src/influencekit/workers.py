"""Worker-pool helper honoring the INFLUENCEKIT_THREADS environment variable.

Replication loops and per-observation influence computations are independent
tasks; results are always merged by index so execution order never changes an
aggregate. The default is sequential execution (INFLUENCEKIT_THREADS unset or
1); the heavy inner kernels are numpy calls that release the GIL, so a thread
pool gives real speedup when enabled.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Iterable, Sequence, TypeVar

T = TypeVar("T")
R = TypeVar("R")


def max_workers() -> int:
    raw = os.environ.get("INFLUENCEKIT_THREADS", "1")
    try:
        value = int(raw)
    except ValueError:
        return 1
    return max(1, value)


def map_indexed(fn: Callable[[T], R], items: Sequence[T]) -> list[R]:
    """Apply fn to each item, preserving input order in the result list."""
    workers = max_workers()
    if workers <= 1 or len(items) <= 1:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))
