"""
Tests for the cached thread pool.
"""

import threading
import time

from ergocert.workers import ExecutorCache, get_cached_executor, map_ordered


def test_map_ordered_preserves_order():
    def slow_square(x):
        time.sleep(0.001 * (10 - x))
        return x * x

    assert map_ordered(slow_square, list(range(10)), max_workers=4) == [x * x for x in range(10)]


def test_single_worker_runs_inline():
    seen = []
    map_ordered(lambda _: seen.append(threading.current_thread().name), [1, 2, 3], max_workers=1)
    assert set(seen) == {threading.current_thread().name}


def test_empty_input():
    assert map_ordered(lambda x: x, [], max_workers=4) == []


def test_worker_count_from_settings(monkeypatch):
    from ergocert.config import reload_settings

    monkeypatch.setenv("ERGOCERT_THREADS", "1")
    reload_settings()
    names = map_ordered(lambda _: threading.current_thread().name, [0, 1])
    assert names == [threading.current_thread().name] * 2


def test_executor_cache_reuses_pools():
    cache = ExecutorCache()
    try:
        first = cache.get_executor(2)
        assert cache.get_executor(2) is first
        assert cache.get_executor(3) is not first
        assert len(cache) == 2
    finally:
        cache.shutdown_all()
    assert len(cache) == 0


def test_executor_recreated_after_shutdown():
    cache = ExecutorCache()
    first = cache.get_executor(2)
    first.shutdown()
    second = cache.get_executor(2)
    assert second is not first
    cache.shutdown_all()


def test_global_cache_thread_names():
    executor = get_cached_executor(2)
    name = executor.submit(lambda: threading.current_thread().name).result()
    assert name.startswith("ergocert-")
