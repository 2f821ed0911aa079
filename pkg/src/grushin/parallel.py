"""Deterministic parallel map.

BLAS is pinned to one thread so that every work item is computed by the same
sequential code whatever the pool size; results are assembled in input order.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from contextlib import contextmanager

from threadpoolctl import threadpool_limits

_THREADS = 1


def set_threads(n):
    global _THREADS
    if int(n) < 1:
        raise ValueError("thread count must be at least 1")
    _THREADS = int(n)


def get_threads():
    return _THREADS


@contextmanager
def single_threaded_blas():
    with threadpool_limits(limits=1):
        yield


def pmap(func, items, threads=None):
    """``[func(i) for i in items]`` on up to ``threads`` workers."""
    items = list(items)
    n = _THREADS if threads is None else int(threads)
    with single_threaded_blas():
        if n <= 1 or len(items) <= 1:
            return [func(i) for i in items]
        with ThreadPoolExecutor(max_workers=n) as pool:
            return list(pool.map(func, items))
