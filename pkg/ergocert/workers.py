"""
Cached thread pool for batch analysis.

Sweeps reuse one ThreadPoolExecutor per worker count instead of creating a
pool per call. The pool size defaults to ERGOCERT_THREADS.
"""

import atexit
import logging
import threading
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Dict, List, Optional, Sequence, Tuple, TypeVar

from .config import get_settings

logger = logging.getLogger(__name__)

T = TypeVar("T")
R = TypeVar("R")


class ExecutorCache:
    """Thread pools keyed by ``(max_workers, thread_name_prefix)``."""

    def __init__(self) -> None:
        self._cache: Dict[Tuple[int, str], ThreadPoolExecutor] = {}
        self._lock = threading.RLock()
        atexit.register(self.shutdown_all)

    def get_executor(
        self, max_workers: Optional[int] = None, thread_name_prefix: str = "ergocert-"
    ) -> ThreadPoolExecutor:
        """
        Get or create a cached executor.

        Args:
            max_workers: Worker threads (default: ERGOCERT_THREADS)
            thread_name_prefix: Prefix for thread names
        """
        if max_workers is None:
            max_workers = get_settings().threads
        key = (max_workers, thread_name_prefix)

        with self._lock:
            executor = self._cache.get(key)
            if executor is not None and not executor._shutdown:  # type: ignore[attr-defined]
                return executor
            executor = ThreadPoolExecutor(
                max_workers=max_workers, thread_name_prefix=thread_name_prefix
            )
            self._cache[key] = executor
            logger.debug("created pool with %d workers", max_workers)
            return executor

    def shutdown_all(self, wait: bool = True) -> None:
        """Shutdown all cached executors."""
        with self._lock:
            for executor in self._cache.values():
                try:
                    executor.shutdown(wait=wait)
                except Exception:
                    pass
            self._cache.clear()

    def __len__(self) -> int:
        with self._lock:
            return len(self._cache)


_executor_cache = ExecutorCache()


def get_cached_executor(
    max_workers: Optional[int] = None, thread_name_prefix: str = "ergocert-"
) -> ThreadPoolExecutor:
    """Return the process-wide cached pool for this size."""
    return _executor_cache.get_executor(max_workers, thread_name_prefix)


def shutdown_executor_cache(wait: bool = True) -> None:
    _executor_cache.shutdown_all(wait)


def map_ordered(
    func: Callable[[T], R], items: Sequence[T], max_workers: Optional[int] = None
) -> List[R]:
    """
    Apply ``func`` to every item on the cached pool.

    Results come back in input order, so aggregation downstream is independent
    of the worker count. With one worker the items run inline.
    """
    workers = get_settings().threads if max_workers is None else max_workers
    if workers <= 1 or len(items) <= 1:
        return [func(item) for item in items]
    executor = get_cached_executor(workers)
    return list(executor.map(func, items))


__all__ = [
    "ExecutorCache",
    "get_cached_executor",
    "shutdown_executor_cache",
    "map_ordered",
]
