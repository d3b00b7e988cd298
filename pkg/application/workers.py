"""Ordered parallel map over independent work items"""
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Iterable, Optional, TypeVar

from config.constants import HARNESS_CONFIG

T = TypeVar('T')
R = TypeVar('R')


def resolve_workers(workers: Optional[int] = None) -> int:
    """Explicit count, else PREC_SCHED_THREADS / harness.workers"""
    if workers is None:
        workers = HARNESS_CONFIG['workers']
    return max(1, int(workers))


def parallel_map(fn: Callable[[T], R], items: Iterable[T], workers: Optional[int] = 1) -> list[R]:
    """Apply fn to every item; results keep the input order"""
    items = list(items)
    workers = resolve_workers(workers)
    if workers == 1 or len(items) <= 1:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=min(workers, len(items))) as pool:
        return list(pool.map(fn, items))
