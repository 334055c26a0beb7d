"""Order-preserving thread pool driven by the BOSEFLUCT_THREADS variable."""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Iterable, TypeVar

T = TypeVar("T")
R = TypeVar("R")

ENV_VAR = "BOSEFLUCT_THREADS"


def thread_count() -> int:
    """Worker count from the environment; 0 or unset means one per CPU."""
    raw = os.environ.get(ENV_VAR, "0").strip() or "0"
    try:
        n = int(raw)
    except ValueError as exc:
        raise ValueError(f"{ENV_VAR} must be an integer, got {raw!r}") from exc
    if n < 0:
        raise ValueError(f"{ENV_VAR} must be non-negative, got {n}")
    return n if n > 0 else (os.cpu_count() or 1)


def parallel_map(fn: Callable[[T], R], items: Iterable[T]) -> list[R]:
    """Apply ``fn`` to every item; results come back in input order.

    Each item is computed by exactly the same code path whatever the worker
    count, so outputs do not depend on the number of threads.
    """
    items = list(items)
    workers = min(thread_count(), len(items))
    if workers <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))
