#!/usr/bin/env python3
"""
Thread fan-out for independent, keyed tasks.
"""

import logging
import os
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, List, Sequence, TypeVar

logger = logging.getLogger(__name__)

T = TypeVar("T")
R = TypeVar("R")


def _get_threads() -> int:
    """
    Get the worker cap from ``POLYCONC_THREADS``.

    ``0``, unset or unparsable values mean "auto" (one worker per CPU).

    Returns:
        Number of worker threads, at least 1.
    """
    env_val = os.environ.get("POLYCONC_THREADS")
    threads = 0
    if env_val is not None:
        try:
            threads = int(env_val)
        except ValueError:
            threads = 0
    if threads <= 0:
        threads = os.cpu_count() or 1
    return max(1, threads)


def map_ordered(fn: Callable[[T], R], items: Sequence[T]) -> List[R]:
    """
    Apply ``fn`` to every item, possibly concurrently, keeping input order.

    Args:
        fn: Pure task function.
        items: Task inputs.

    Returns:
        Results in the order of ``items``.
    """
    workers = min(_get_threads(), len(items))
    if workers <= 1:
        return [fn(item) for item in items]
    logger.debug("fanning out %d tasks over %d threads", len(items), workers)
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))
