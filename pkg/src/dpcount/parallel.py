"""Order-preserving process pool map; results never depend on the worker count."""
from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from typing import Callable, Iterable, Sequence


def chunked(items: Sequence, n: int) -> list:
    """Split items into at most n contiguous chunks of near-equal size."""
    items = list(items)
    n = max(1, min(n, len(items)))
    k, rem = divmod(len(items), n)
    out, start = [], 0
    for i in range(n):
        size = k + (1 if i < rem else 0)
        out.append(items[start:start + size])
        start += size
    return [c for c in out if c]


def ordered_map(func: Callable, tasks: Iterable, threads: int = 1) -> list:
    tasks = list(tasks)
    if threads <= 1 or len(tasks) <= 1:
        return [func(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=threads) as ex:
        return list(ex.map(func, tasks))
