"""Deterministic block-parallel map.

Work is split into blocks whose boundaries do not depend on the thread count, so
results are bitwise identical whether blocks run serially or on a pool.
"""
from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Sequence, TypeVar

T = TypeVar("T")
R = TypeVar("R")

THREADS_ENV = "NLS3LAB_THREADS"
BLOCK = 64


def thread_count() -> int:
    raw = os.environ.get(THREADS_ENV, "1")
    try:
        return max(1, int(raw))
    except ValueError:
        return 1


def ordered_map(fn: Callable[[T], R], items: Sequence[T], threads: int | None = None) -> list[R]:
    threads = thread_count() if threads is None else threads
    if threads <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))


def blocks(total: int, size: int = BLOCK) -> list[slice]:
    return [slice(i, min(i + size, total)) for i in range(0, total, size)]
