"""Deterministic scenario-parallel execution.

Scenarios are cut into fixed-size chunks whose boundaries depend only on
the scenario count, never on the number of workers. Each chunk draws its
own random streams from ``(seed, scenario index)``, so the merged result is
bit-identical for any thread count.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, TypeVar

R = TypeVar("R")

CHUNK_SIZE = 250


def default_threads() -> int:
    return max(os.cpu_count() or 1, 1)


def chunk_bounds(n: int, chunk_size: int = CHUNK_SIZE) -> list[tuple[int, int]]:
    return [(s, min(s + chunk_size, n)) for s in range(0, n, chunk_size)]


def map_chunks(fn: Callable[[int, int], R], n: int, threads: int | None = None,
               chunk_size: int = CHUNK_SIZE) -> list[R]:
    """Apply ``fn(start, stop)`` to every chunk of ``range(n)``; results in chunk order."""
    bounds = chunk_bounds(n, chunk_size)
    threads = default_threads() if threads is None else max(int(threads), 1)
    if threads == 1 or len(bounds) == 1:
        return [fn(a, b) for a, b in bounds]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(lambda ab: fn(*ab), bounds))
