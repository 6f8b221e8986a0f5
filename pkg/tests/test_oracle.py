"""Sequential-oracle equivalence at quick depths (deep sweeps run in the
acceptance gate)."""

import pytest

from cqsync.harness.oracle import (
    RealSemaphore,
    SemaphoreModel,
    TraceVariant,
    check_traces,
    iter_traces,
    standard_variants,
)

QUICK_DEPTH = 6


def variant_by_name(name):
    matches = [v for v in standard_variants() if v.name == name]
    assert len(matches) == 1
    return matches[0]


def test_standard_variants_cover_every_primitive():
    names = [variant.name for variant in standard_variants()]
    assert len(names) == len(set(names))
    for prefix in ("mutex", "semaphore", "latch", "pool-queue", "pool-stack",
                   "barrier"):
        assert any(name.startswith(prefix) for name in names), prefix


@pytest.mark.parametrize("name", [
    "mutex", "mutex-sync", "mutex-simple", "semaphore-2", "semaphore-2-sync",
    "latch-1", "latch-2", "pool-queue", "pool-stack", "barrier-3",
])
def test_quick_equivalence(name):
    report = check_traces(variant_by_name(name), QUICK_DEPTH)
    assert report.ok, str(report)
    assert report.replays > 0
    assert report.traces >= report.replays


def test_iter_traces_yields_maximal_traces_only():
    # A mutex with one permit: the only depth-1 trace is a lone acquire,
    # and every deeper trace extends it.
    traces = list(iter_traces(lambda: SemaphoreModel(1), 1))
    assert traces == [[("acquire", None)]]
    deeper = list(iter_traces(lambda: SemaphoreModel(1), 3))
    assert all(len(trace) == 3 for trace in deeper)
    assert all(trace[0] == ("acquire", None) for trace in deeper)


def test_trace_census_is_deterministic():
    first = sum(1 for _ in iter_traces(lambda: SemaphoreModel(2), 5))
    second = sum(1 for _ in iter_traces(lambda: SemaphoreModel(2), 5))
    assert first == second
    assert first > 10


def test_mismatched_pair_is_detected():
    # Model a 2-permit semaphore but hand the checker a 1-permit real one:
    # the very first acquire disagrees about the resulting counter.
    broken = TraceVariant("broken",
                          lambda: SemaphoreModel(2),
                          lambda: RealSemaphore(1))
    report = check_traces(broken, 3)
    assert not report.ok
    assert report.mismatch["kind"] in {"result", "counter", "state"}
    assert report.mismatch["trace"], "mismatch must carry the failing trace"
