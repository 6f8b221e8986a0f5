"""Timed workloads for the benchmark CLI.

Each workload runs ``ops`` operations split across ``n`` real threads with
geometrically-distributed busy work inside and outside the critical
operation (``work_in`` / ``work_out`` mean spin iterations), mirroring the
classic contended-primitive setup: acquire-work-release for semaphores and
locks, phase crossings for barriers, count-downs for latches, and
take-work-put cycles for the blocking pools.

Methodology: every (primitive, thread-count) point is measured over
``repetitions`` full runs; the leading 20% of runs are discarded as warmup
and the remaining wall-clock times are reduced to mean and standard
deviation of nanoseconds per operation.
"""

from __future__ import annotations

import math
import random
import statistics
import threading
import time
from dataclasses import dataclass, field
from typing import Callable, List, Sequence

from ..pools import QueuePool, StackPool
from ..primitives import Barrier, CountDownLatch, Mutex, Semaphore
from .locks import ClhLock, McsLock

__all__ = [
    "PRIMITIVES",
    "BenchConfig",
    "BenchRow",
    "geometric_iterations",
    "run_config",
    "spin",
]

PRIMITIVES = (
    "mutex",
    "semaphore",
    "barrier",
    "latch",
    "pool-queue",
    "pool-stack",
    "clh",
    "mcs",
)

DEFAULT_REPETITIONS = 5
WARMUP_FRACTION = 0.2


@dataclass
class BenchConfig:
    """One benchmark request: a primitive swept over thread counts."""

    primitive: str
    threads: Sequence[int] = (1,)
    param: int = 1
    work_in: int = 100
    work_out: int = 100
    ops: int = 10_000
    seed: int = 1
    repetitions: int = DEFAULT_REPETITIONS


@dataclass
class BenchRow:
    """One CSV row: aggregated timing for a (primitive, threads) point."""

    primitive: str
    threads: int
    param: int
    mean_ns: float
    std_ns: float
    ops: int

    def as_csv(self) -> str:
        return "%s,%d,%d,%.1f,%.1f,%d" % (
            self.primitive,
            self.threads,
            self.param,
            self.mean_ns,
            self.std_ns,
            self.ops,
        )


def geometric_iterations(rng: random.Random, mean: int) -> int:
    """Draw a spin count from a geometric distribution with the given mean.

    The distribution is over {1, 2, ...} with success probability 1/mean,
    sampled by inverse CDF; ``mean <= 0`` disables the work entirely.
    """
    if mean <= 0:
        return 0
    if mean == 1:
        return 1
    u = rng.random()
    return 1 + int(math.log1p(-u) / math.log1p(-1.0 / mean))


def spin(iterations: int) -> None:
    for _ in range(iterations):
        pass


def _thread_rng(seed: int, rep: int, tid: int) -> random.Random:
    return random.Random((seed * 1_000_003 + rep) * 1_000_003 + tid)


@dataclass
class _Run:
    """One fully-constructed repetition: thread bodies plus the op total."""

    bodies: List[Callable[[], None]]
    total_ops: int
    finisher: Callable[[], None] = field(default=lambda: None)


def _split_ops(ops: int, threads: int) -> int:
    return max(1, ops // threads)


def _lock_run(make_lock, config: BenchConfig, rep: int, threads: int) -> _Run:
    lock = make_lock()
    per_thread = _split_ops(config.ops, threads)

    def body(tid: int) -> Callable[[], None]:
        rng = _thread_rng(config.seed, rep, tid)

        def run() -> None:
            for _ in range(per_thread):
                lock.lock()
                spin(geometric_iterations(rng, config.work_in))
                lock.unlock()
                spin(geometric_iterations(rng, config.work_out))

        return run

    return _Run([body(t) for t in range(threads)], per_thread * threads)


def _mutex_run(config: BenchConfig, rep: int, threads: int) -> _Run:
    mutex = Mutex()
    per_thread = _split_ops(config.ops, threads)

    def body(tid: int) -> Callable[[], None]:
        rng = _thread_rng(config.seed, rep, tid)

        def run() -> None:
            for _ in range(per_thread):
                mutex.lock().blocking_get()
                spin(geometric_iterations(rng, config.work_in))
                mutex.unlock()
                spin(geometric_iterations(rng, config.work_out))

        return run

    return _Run([body(t) for t in range(threads)], per_thread * threads)


def _semaphore_run(config: BenchConfig, rep: int, threads: int) -> _Run:
    sem = Semaphore(max(1, config.param))
    per_thread = _split_ops(config.ops, threads)

    def body(tid: int) -> Callable[[], None]:
        rng = _thread_rng(config.seed, rep, tid)

        def run() -> None:
            for _ in range(per_thread):
                sem.acquire().blocking_get()
                spin(geometric_iterations(rng, config.work_in))
                sem.release()
                spin(geometric_iterations(rng, config.work_out))

        return run

    return _Run([body(t) for t in range(threads)], per_thread * threads)


def _barrier_run(config: BenchConfig, rep: int, threads: int) -> _Run:
    # Phase benchmark: every thread crosses a fresh barrier per operation,
    # so one "op" is one whole-group phase transition.
    phases = _split_ops(config.ops, threads)
    barriers = [Barrier(threads, segment_size=4) for _ in range(phases)]

    def body(tid: int) -> Callable[[], None]:
        rng = _thread_rng(config.seed, rep, tid)

        def run() -> None:
            for barrier in barriers:
                spin(geometric_iterations(rng, config.work_in))
                barrier.arrive().blocking_get()
                spin(geometric_iterations(rng, config.work_out))

        return run

    return _Run([body(t) for t in range(threads)], phases * threads)


def _latch_run(config: BenchConfig, rep: int, threads: int) -> _Run:
    # Count-down benchmark: the latch's count equals the total op budget and
    # every thread hammers count_down; the finisher checks the latch opened.
    per_thread = _split_ops(config.ops, threads)
    total = per_thread * threads
    latch = CountDownLatch(total)

    def body(tid: int) -> Callable[[], None]:
        rng = _thread_rng(config.seed, rep, tid)

        def run() -> None:
            for _ in range(per_thread):
                spin(geometric_iterations(rng, config.work_in))
                latch.count_down()
                spin(geometric_iterations(rng, config.work_out))

        return run

    def finisher() -> None:
        latch.await_().blocking_get()

    return _Run([body(t) for t in range(threads)], total, finisher)


def _pool_run(config: BenchConfig, rep: int, threads: int, fifo: bool) -> _Run:
    pool = QueuePool() if fifo else StackPool()
    for element in range(max(1, config.param)):
        pool.put(element)
    per_thread = _split_ops(config.ops, threads)

    def body(tid: int) -> Callable[[], None]:
        rng = _thread_rng(config.seed, rep, tid)

        def run() -> None:
            for _ in range(per_thread):
                element = pool.take().blocking_get()
                spin(geometric_iterations(rng, config.work_in))
                pool.put(element)
                spin(geometric_iterations(rng, config.work_out))

        return run

    return _Run([body(t) for t in range(threads)], per_thread * threads)


def _build_run(config: BenchConfig, rep: int, threads: int) -> _Run:
    name = config.primitive
    if name == "mutex":
        return _mutex_run(config, rep, threads)
    if name == "semaphore":
        return _semaphore_run(config, rep, threads)
    if name == "barrier":
        return _barrier_run(config, rep, threads)
    if name == "latch":
        return _latch_run(config, rep, threads)
    if name == "pool-queue":
        return _pool_run(config, rep, threads, fifo=True)
    if name == "pool-stack":
        return _pool_run(config, rep, threads, fifo=False)
    if name == "clh":
        return _lock_run(ClhLock, config, rep, threads)
    if name == "mcs":
        return _lock_run(McsLock, config, rep, threads)
    raise ValueError("unknown primitive: %r" % (name,))


def _time_run(run: _Run) -> float:
    """Execute one repetition and return nanoseconds per operation."""
    gate = threading.Barrier(len(run.bodies) + 1)
    failures: List[BaseException] = []

    def wrap(body: Callable[[], None]) -> Callable[[], None]:
        def target() -> None:
            gate.wait()
            try:
                body()
            except BaseException as exc:  # pragma: no cover - surfaced below
                failures.append(exc)

        return target

    workers = [
        threading.Thread(target=wrap(body), daemon=True) for body in run.bodies
    ]
    for worker in workers:
        worker.start()
    gate.wait()
    started = time.perf_counter_ns()
    for worker in workers:
        worker.join()
    run.finisher()
    elapsed = time.perf_counter_ns() - started
    if failures:
        raise failures[0]
    return elapsed / run.total_ops


def _warmup_count(repetitions: int) -> int:
    if repetitions <= 1:
        return 0
    return max(1, int(repetitions * WARMUP_FRACTION))


def run_config(config: BenchConfig) -> List[BenchRow]:
    """Measure the configured primitive at every requested thread count."""
    rows = []
    for threads in config.threads:
        samples = [
            _time_run(_build_run(config, rep, threads))
            for rep in range(max(1, config.repetitions))
        ]
        kept = samples[_warmup_count(len(samples)):]
        ops = _split_ops(config.ops, threads) * threads
        rows.append(
            BenchRow(
                primitive=config.primitive,
                threads=threads,
                param=config.param,
                mean_ns=statistics.fmean(kept),
                std_ns=statistics.pstdev(kept) if len(kept) > 1 else 0.0,
                ops=ops,
            )
        )
    return rows
