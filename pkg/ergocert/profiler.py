"""
Stage timing for analysis pipelines.

Timings are reported on stderr by the CLI ``--profile`` flag and never enter
report bundles.
"""

import sys
import time
from collections import defaultdict
from contextlib import contextmanager
from typing import Dict, Iterator, List, Optional, TextIO


class StageProfiler:
    """Profile named pipeline stages (spectral, series, proof chain, ...)."""

    def __init__(self) -> None:
        self.stage_times: Dict[str, List[float]] = defaultdict(list)
        self.current_stage: Optional[str] = None

    @contextmanager
    def stage(self, name: str) -> Iterator[None]:
        """Context manager timing one execution of a stage."""
        previous = self.current_stage
        self.current_stage = name
        start = time.perf_counter()
        try:
            yield
        finally:
            self.stage_times[name].append(time.perf_counter() - start)
            self.current_stage = previous

    def get_stats(self) -> Dict[str, Dict[str, float]]:
        """Per-stage count, total, average, min and max seconds."""
        stats: Dict[str, Dict[str, float]] = {}
        for name, times in self.stage_times.items():
            if times:
                stats[name] = {
                    "count": float(len(times)),
                    "total_time": sum(times),
                    "avg_time": sum(times) / len(times),
                    "min_time": min(times),
                    "max_time": max(times),
                }
        return stats

    def print_report(self, stream: Optional[TextIO] = None) -> None:
        """Write the stage table, slowest stage first."""
        out = stream or sys.stderr
        stats = self.get_stats()
        if not stats:
            print("No stages profiled.", file=out)
            return

        print("=" * 72, file=out)
        print(
            f"{'Stage':<24} {'Count':>8} {'Total (ms)':>12} {'Avg (ms)':>12} {'Max (ms)':>12}",
            file=out,
        )
        print("-" * 72, file=out)
        for name, s in sorted(stats.items(), key=lambda x: x[1]["total_time"], reverse=True):
            print(
                f"{name:<24} "
                f"{int(s['count']):>8} "
                f"{s['total_time']*1000:>12.2f} "
                f"{s['avg_time']*1000:>12.2f} "
                f"{s['max_time']*1000:>12.2f}",
                file=out,
            )
        print("=" * 72, file=out)


class _NullProfiler(StageProfiler):
    @contextmanager
    def stage(self, name: str) -> Iterator[None]:
        yield


def create_profiler(enabled: bool = True) -> StageProfiler:
    """A recording profiler, or a no-op one when ``enabled`` is False."""
    return StageProfiler() if enabled else _NullProfiler()


__all__ = ["StageProfiler", "create_profiler"]
