"""
Bounded worker pool for independent sweeps (grid points, runs, parameter cells)
"""

import logging
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Iterable, List, Optional, TypeVar

from fdkp.utils.config import get_settings

logger = logging.getLogger(__name__)

T = TypeVar("T")
R = TypeVar("R")


def worker_count(requested: Optional[int] = None) -> int:
    """Requested count capped by FDKP_THREADS"""
    cap = get_settings().threads
    if requested is None:
        return cap
    return max(1, min(requested, cap))


def map_parallel(fn: Callable[[T], R], items: Iterable[T], max_workers: Optional[int] = None) -> List[R]:
    """fn over items on the bounded pool; results keep the input order and the first error propagates"""
    items = list(items)
    workers = min(worker_count(max_workers), max(1, len(items)))
    if workers == 1 or len(items) <= 1:
        return [fn(item) for item in items]
    logger.debug("dispatching %d tasks to %d workers", len(items), workers)
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))
