"""Bounded thread pool used for grid-shaped work.

numpy releases the GIL inside the trig/matmul kernels that dominate the
quadrature, so plain threads give real speedups. Results are always
collected in submission order, which keeps every summation deterministic.
"""
from concurrent.futures import ThreadPoolExecutor

_THREADS = 1


def set_threads(n):
    global _THREADS
    if int(n) < 1:
        raise ValueError("threads must be >= 1")
    _THREADS = int(n)


def get_threads():
    return _THREADS


def thread_map(func, items):
    items = list(items)
    if _THREADS == 1 or len(items) < 2:
        return [func(it) for it in items]
    with ThreadPoolExecutor(max_workers=_THREADS) as pool:
        return list(pool.map(func, items))
