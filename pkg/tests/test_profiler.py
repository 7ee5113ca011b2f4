"""
Tests for stage profiling.
"""

import io
import time

from ergocert.profiler import StageProfiler, create_profiler


def test_stage_profiler_basic():
    """Test basic stage profiling."""
    profiler = StageProfiler()

    with profiler.stage("spectral"):
        time.sleep(0.01)

    with profiler.stage("series"):
        time.sleep(0.02)

    stats = profiler.get_stats()
    assert stats["spectral"]["count"] == 1
    assert stats["series"]["count"] == 1
    assert stats["spectral"]["total_time"] >= 0.01
    assert stats["series"]["total_time"] >= 0.02


def test_stage_profiler_stats():
    profiler = StageProfiler()

    for delay in (0.01, 0.02, 0.01):
        with profiler.stage("certificate"):
            time.sleep(delay)

    stats = profiler.get_stats()["certificate"]
    assert stats["count"] == 3
    assert stats["min_time"] >= 0.01
    assert stats["max_time"] >= 0.02
    assert stats["avg_time"] == stats["total_time"] / 3


def test_nested_stages_restore_current():
    profiler = StageProfiler()
    with profiler.stage("outer"):
        with profiler.stage("inner"):
            assert profiler.current_stage == "inner"
        assert profiler.current_stage == "outer"
    assert profiler.current_stage is None


def test_stage_recorded_on_exception():
    profiler = StageProfiler()
    try:
        with profiler.stage("failing"):
            raise RuntimeError("boom")
    except RuntimeError:
        pass
    assert profiler.get_stats()["failing"]["count"] == 1


def test_print_report_defaults_to_stderr(capsys):
    profiler = StageProfiler()
    with profiler.stage("proof chain"):
        time.sleep(0.001)

    profiler.print_report()
    captured = capsys.readouterr()
    assert captured.out == ""
    assert "proof chain" in captured.err
    assert "Stage" in captured.err


def test_print_report_slowest_first():
    profiler = StageProfiler()
    with profiler.stage("fast"):
        pass
    with profiler.stage("slow"):
        time.sleep(0.01)

    buf = io.StringIO()
    profiler.print_report(buf)
    text = buf.getvalue()
    assert text.index("slow") < text.index("fast")


def test_empty_report():
    buf = io.StringIO()
    StageProfiler().print_report(buf)
    assert "No stages profiled" in buf.getvalue()


def test_create_profiler_disabled():
    profiler = create_profiler(enabled=False)
    with profiler.stage("anything"):
        pass
    assert profiler.get_stats() == {}
    assert isinstance(create_profiler(), StageProfiler)
