"""Free-running multi-thread stress workloads with exact accounting.

Unlike the deterministic explorer these run real threads at full speed; the
checks are the invariants that survive nondeterminism exactly:

* occupancy never exceeds the permit count, at any instant;
* every operation is accounted for — completions + won cancellations equal
  the operations issued, thread-side tallies equal the queue's own counters,
  and the permit/size counter returns to its resting value at quiescence;
* the delivery balance identity holds once all threads have joined;
* pool elements are conserved: delivered + drained equals inserted, with no
  duplicates.

A stalled workload (lost wake-up) is reported as a violation instead of
hanging: worker threads are joined with a deadline.

``segment_bound_run`` is the single-threaded memory-shape probe: it parks
waiters, cancels a pattern, consumes a prefix, and compares the number of
reachable segments against ``ceil(outstanding / segment_size) + 3`` — the
bound that holds whenever the outstanding waiters form a packed suffix
(pure FIFO consumption) or the queue fully drains.
"""

from __future__ import annotations

import math
import random
import threading
import time
from dataclasses import dataclass, field
from typing import Any, Callable, Optional

from ..atomics import AtomicInt
from ..core import CqsStats
from ..futures import ImmediateResult, Request, UNIT
from ..pools import QueuePool, StackPool
from ..primitives import Barrier, CountDownLatch, Semaphore

_JOIN_DEADLINE = 180.0  # seconds; generous for 1-CPU boxes


@dataclass
class StressReport:
    name: str
    ops: int
    counters: dict = field(default_factory=dict)
    violations: list = field(default_factory=list)
    elapsed: float = 0.0

    @property
    def ok(self) -> bool:
        return not self.violations

    def __str__(self) -> str:
        verdict = "ok" if self.ok else f"VIOLATIONS {self.violations}"
        return f"{self.name}: ops={self.ops} {self.elapsed:.1f}s {verdict}"


def _run_threads(bodies: list[Callable[[], None]],
                 report: StressReport) -> None:
    errors: list = []

    def wrap(body):
        def run():
            try:
                body()
            except BaseException as exc:  # noqa: BLE001 - reported, not hidden
                errors.append(exc)
        return run

    threads = [threading.Thread(target=wrap(b), daemon=True) for b in bodies]
    start = time.monotonic()
    for t in threads:
        t.start()
    deadline = start + _JOIN_DEADLINE
    for t in threads:
        t.join(max(0.0, deadline - time.monotonic()))
    stalled = [t for t in threads if t.is_alive()]
    if stalled:
        report.violations.append(
            f"{len(stalled)} worker(s) stalled past {_JOIN_DEADLINE:.0f}s "
            "(lost wake-up?)")
    for exc in errors:
        report.violations.append(f"worker raised: {exc!r}")


def _thread_rng(seed: int, tid: int) -> random.Random:
    # Arithmetic derivation keeps runs reproducible across processes
    # (tuple seeding depends on hash randomization).
    return random.Random(seed * 1_000_003 + tid)


# -- semaphore / mutex --------------------------------------------------------

def semaphore_stress(permits: int, *, threads: int = 16, ops: int = 100_000,
                     cancel_rate: float = 0.0, seed: int = 0,
                     sync: bool = False, simple: bool = False,
                     segment_size: int = 16) -> StressReport:
    stats = CqsStats()
    sem = Semaphore(permits, sync=sync, simple_cancellation=simple,
                    segment_size=segment_size, stats=stats)
    inside = AtomicInt(0)
    over_cap = AtomicInt(0)
    completions = AtomicInt(0)        # parked acquires that got the permit
    immediate = AtomicInt(0)
    cancels_won = AtomicInt(0)
    per_thread = ops // threads
    name = (f"semaphore(K={permits},sync={sync},simple={simple},"
            f"rate={cancel_rate},seed={seed})")
    report = StressReport(name, per_thread * threads)

    def body(tid: int) -> Callable[[], None]:
        rng = _thread_rng(seed, tid)

        def run() -> None:
            for _ in range(per_thread):
                future = sem.acquire()
                if isinstance(future, ImmediateResult):
                    immediate.fetch_and_add(1)
                elif rng.random() < cancel_rate and future.cancel():
                    cancels_won.fetch_and_add(1)
                    continue
                else:
                    value = future.blocking_get()
                    assert value is UNIT
                    completions.fetch_and_add(1)
                now = inside.fetch_and_add(1) + 1
                if now > permits:
                    over_cap.fetch_and_add(1)
                inside.fetch_and_add(-1)
                sem.release()
        return run

    start = time.perf_counter()
    _run_threads([body(t) for t in range(threads)], report)
    report.elapsed = time.perf_counter() - start

    snap = stats.snapshot()
    report.counters = {
        "immediate": immediate.load_relaxed(),
        "completions": completions.load_relaxed(),
        "cancels_won": cancels_won.load_relaxed(),
        **snap,
    }
    if report.violations:
        return report
    if over_cap.load_relaxed():
        report.violations.append(
            f"occupancy exceeded {permits} permits "
            f"{over_cap.load_relaxed()} times")
    issued = per_thread * threads
    granted = immediate.load_relaxed() + completions.load_relaxed()
    if granted + cancels_won.load_relaxed() != issued:
        report.violations.append(
            f"acquire accounting: {granted} granted + "
            f"{cancels_won.load_relaxed()} cancelled != {issued} issued")
    if stats.suspend_conservation() != 0:
        # A suspend may pick its value up as an ImmediateResult (the pairing
        # resume deposited first), so thread-side counts cannot split
        # completed exactly; the queue's own conservation law can.
        report.violations.append(f"suspend conservation != 0: {snap}")
    if completions.load_relaxed() > snap["completed"]:
        report.violations.append(
            f"thread-side completions {completions.load_relaxed()} exceed "
            f"queue-side {snap['completed']}")
    if cancels_won.load_relaxed() != snap["cancels"]:
        report.violations.append(
            f"thread-side cancels {cancels_won.load_relaxed()} != "
            f"queue-side {snap['cancels']}")
    if stats.balance() != 0:
        report.violations.append(f"delivery balance != 0: {snap}")
    if sem.available_permits() != permits:
        report.violations.append(
            f"counter did not return to {permits}: {sem.available_permits()}")
    return report


def mutex_stress(**kwargs) -> StressReport:
    return semaphore_stress(1, **kwargs)


# -- count-down latch ---------------------------------------------------------

def latch_stress(*, threads: int = 16, ops: int = 100_000,
                 cancel_rate: float = 0.0, seed: int = 0,
                 segment_size: int = 16) -> StressReport:
    """Rounds of one latch each: one opener, ``threads - 1`` waiters."""
    rounds = max(1, ops // threads)
    stats = CqsStats()
    completions = AtomicInt(0)
    cancels_won = AtomicInt(0)
    immediate = AtomicInt(0)
    gate = threading.Barrier(threads)
    latches: list[Optional[CountDownLatch]] = [None] * rounds
    report = StressReport(
        f"latch(rate={cancel_rate},seed={seed})", rounds * threads)

    def body(tid: int) -> Callable[[], None]:
        rng = _thread_rng(seed, tid)

        def run() -> None:
            for r in range(rounds):
                opener = r % threads
                if tid == opener:
                    latches[r] = CountDownLatch(1, segment_size=segment_size,
                                                stats=stats)
                gate.wait(timeout=60)
                latch = latches[r]
                if tid == opener:
                    latch.count_down()
                else:
                    future = latch.await_()
                    if isinstance(future, ImmediateResult):
                        immediate.fetch_and_add(1)
                    elif rng.random() < cancel_rate and future.cancel():
                        cancels_won.fetch_and_add(1)
                    else:
                        assert future.blocking_get() is UNIT
                        completions.fetch_and_add(1)
                gate.wait(timeout=60)
                if latch.count() != 0:
                    raise AssertionError("latch still closed after the round")
        return run

    start = time.perf_counter()
    _run_threads([body(t) for t in range(threads)], report)
    report.elapsed = time.perf_counter() - start

    snap = stats.snapshot()
    report.counters = {
        "immediate": immediate.load_relaxed(),
        "completions": completions.load_relaxed(),
        "cancels_won": cancels_won.load_relaxed(),
        **snap,
    }
    if report.violations:
        return report
    waits = rounds * (threads - 1)
    settled = (immediate.load_relaxed() + completions.load_relaxed()
               + cancels_won.load_relaxed())
    if settled != waits:
        report.violations.append(
            f"await accounting: {settled} settled != {waits} issued")
    if stats.suspend_conservation() != 0:
        report.violations.append(f"suspend conservation != 0: {snap}")
    if completions.load_relaxed() > snap["completed"]:
        report.violations.append(
            f"thread-side completions {completions.load_relaxed()} exceed "
            f"queue-side {snap['completed']}")
    if stats.balance() != 0:
        report.violations.append(f"delivery balance != 0: {snap}")
    return report


# -- barrier -------------------------------------------------------------------

def barrier_stress(*, threads: int = 16, ops: int = 100_000,
                   segment_size: int = 16) -> StressReport:
    rounds = max(1, ops // threads)
    barriers: list[Optional[Barrier]] = [None] * rounds
    gate = threading.Barrier(threads)
    completions = AtomicInt(0)
    report = StressReport("barrier", rounds * threads)

    def body(tid: int) -> Callable[[], None]:
        def run() -> None:
            for r in range(rounds):
                if tid == r % threads:
                    barriers[r] = Barrier(threads, segment_size=segment_size)
                gate.wait(timeout=60)
                future = barriers[r].arrive()
                assert future.blocking_get() is UNIT
                assert future.cancel() is False
                completions.fetch_and_add(1)
        return run

    start = time.perf_counter()
    _run_threads([body(t) for t in range(threads)], report)
    report.elapsed = time.perf_counter() - start
    report.counters = {"completions": completions.load_relaxed()}
    if not report.violations and completions.load_relaxed() != rounds * threads:
        report.violations.append(
            f"{completions.load_relaxed()} arrivals completed, "
            f"expected {rounds * threads}")
    return report


# -- blocking pools -------------------------------------------------------------

def pool_stress(kind: str, *, threads: int = 16, ops: int = 100_000,
                cancel_rate: float = 0.0, seed: int = 0,
                segment_size: int = 16) -> StressReport:
    stats = CqsStats()
    if kind == "queue":
        pool: Any = QueuePool(segment_size=segment_size, stats=stats)
    elif kind == "stack":
        pool = StackPool(stats=stats)
    else:
        raise ValueError(f"unknown pool kind {kind!r}")
    per_thread = max(1, ops // (2 * threads))  # each iteration: one put, one take
    puts_total = per_thread * threads
    delivered_sets: list[set] = [set() for _ in range(threads)]
    cancels_won = AtomicInt(0)
    report = StressReport(
        f"pool-{kind}(rate={cancel_rate},seed={seed})", 2 * puts_total)

    def body(tid: int) -> Callable[[], None]:
        rng = _thread_rng(seed, tid)
        got = delivered_sets[tid]

        def run() -> None:
            for i in range(per_thread):
                pool.put((tid << 32) | i)
                future = pool.take()
                if isinstance(future, ImmediateResult):
                    got.add(future.get())
                elif rng.random() < cancel_rate and future.cancel():
                    cancels_won.fetch_and_add(1)
                else:
                    got.add(future.blocking_get())
        return run

    start = time.perf_counter()
    _run_threads([body(t) for t in range(threads)], report)
    report.elapsed = time.perf_counter() - start

    snap = stats.snapshot()
    delivered: set = set()
    duplicates = 0
    for got in delivered_sets:
        duplicates += len(delivered & got)
        delivered |= got
    drained: set = set()
    size = pool.size()
    for _ in range(max(size, 0)):
        future = pool.take()
        if not isinstance(future, ImmediateResult):
            report.violations.append("drain suspended though size() said not to")
            future.cancel()
            break
        drained.add(future.get())
    report.counters = {
        "delivered": len(delivered), "drained": len(drained),
        "cancels_won": cancels_won.load_relaxed(), "size": size, **snap,
    }
    if report.violations:
        return report
    if duplicates:
        report.violations.append(f"{duplicates} duplicate deliveries")
    if delivered & drained:
        report.violations.append("element both delivered and left in store")
    if len(delivered) + len(drained) != puts_total:
        report.violations.append(
            f"conservation: {len(delivered)} delivered + {len(drained)} "
            f"drained != {puts_total} inserted")
    if size != puts_total - len(delivered):
        report.violations.append(
            f"size {size} != {puts_total} - {len(delivered)} delivered")
    if stats.balance() != 0:
        report.violations.append(f"delivery balance != 0: {snap}")
    return report


# -- segment reachability (memory shape) -----------------------------------------

@dataclass
class SegmentBoundReport:
    waiters: int
    cancelled: int
    consumed: int
    outstanding: int
    reachable: int
    bound: int

    @property
    def ok(self) -> bool:
        return self.reachable <= self.bound

    def __str__(self) -> str:
        verdict = "ok" if self.ok else "EXCEEDED"
        return (f"waiters={self.waiters} cancelled={self.cancelled} "
                f"consumed={self.consumed} outstanding={self.outstanding}: "
                f"reachable={self.reachable} bound={self.bound} {verdict}")


def segment_bound_run(waiters: int, *, segment_size: int = 16,
                      cancel: Callable[[int], bool] = lambda i: False,
                      consume: Optional[int] = None,
                      seed: int = 0) -> SegmentBoundReport:
    """Park ``waiters``, cancel ``cancel(i)`` picks, consume a FIFO prefix.

    ``consume`` is how many surviving waiters to resume (default: all).
    After consumption the outstanding waiters form a packed suffix, so the
    reachable segment count must stay within
    ``ceil(outstanding / segment_size) + 3``.
    """
    del seed  # reserved for callers building random cancel predicates
    sem = Semaphore(1, segment_size=segment_size)
    hold = sem.acquire()
    assert isinstance(hold, ImmediateResult)
    futures = [sem.acquire() for _ in range(waiters)]
    assert all(isinstance(f, Request) for f in futures)

    survivors = []
    cancelled = 0
    for i, future in enumerate(futures):
        if cancel(i):
            assert future.cancel()
            cancelled += 1
        else:
            survivors.append(future)
    to_consume = len(survivors) if consume is None else min(consume,
                                                            len(survivors))
    for i in range(to_consume):
        sem.release()  # hands the permit straight to the oldest survivor
        assert survivors[i].get() is UNIT

    outstanding = len(survivors) - to_consume
    reachable = len(sem.cqs.reachable_segments())
    bound = math.ceil(outstanding / segment_size) + 3
    return SegmentBoundReport(waiters, cancelled, to_consume, outstanding,
                              reachable, bound)
