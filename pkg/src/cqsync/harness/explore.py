"""Deterministic interleaving exploration at atomic-operation granularity.

Scenario threads run on real OS threads, but strictly one at a time: every
atomic operation (see ``cqsync.atomics``) parks the running thread and hands
control back to a scheduler, which picks who moves next.  A run is therefore
fully determined by its sequence of choices, and the explorer either walks
the whole choice tree (``exhaustive``), walks it under a preemption budget
(only so many switches away from a runnable thread), or samples it randomly
from a seed.  Identical seed and scenario replay the identical trace.

Blocked threads (``wait_until`` predicates, e.g. a future's blocking_get)
are parked rather than spun, so busy-waits do not blow up the choice tree
and an all-parked state is reported as a deadlock counterexample.
"""

from __future__ import annotations

import random
import threading
import time
import traceback
from dataclasses import dataclass
from typing import Any, Callable, Optional, Sequence

from ..atomics import set_controller

_MAX_STEPS_DEFAULT = 20_000


class _AbortRun(BaseException):
    """Unwinds abandoned scenario threads after a verdict; never caught by
    scenario code (BaseException keeps it clear of ``except Exception``)."""


@dataclass
class Scenario:
    """A checkable concurrent program.

    ``setup`` builds fresh shared state; each entry of ``threads`` is a
    callable taking that state and running one thread's operations;
    ``finalize`` runs single-threaded after all threads finished and should
    assert the scenario's invariants (it must not block: use ``get()`` and
    try-operations, never ``blocking_get`` on a pending future).
    """

    name: str
    setup: Callable[[], Any]
    threads: Sequence[Callable[[Any], None]]
    finalize: Optional[Callable[[Any], None]] = None


@dataclass
class Counterexample:
    kind: str                    # 'exception' | 'deadlock' | 'livelock' | 'finalize'
    message: str
    schedule: list[int]          # thread index per step, replayable
    thread: Optional[int] = None
    details: str = ""

    def __str__(self) -> str:
        where = f" in thread {self.thread}" if self.thread is not None else ""
        head = f"[{self.kind}]{where} {self.message}\nschedule: {self.schedule}"
        return head + (f"\n{self.details}" if self.details else "")


@dataclass
class ExploreResult:
    ok: bool
    schedules: int
    steps: int
    exhausted: bool              # the whole (possibly bounded) tree was walked
    counterexample: Optional[Counterexample] = None
    elapsed: float = 0.0

    def __str__(self) -> str:
        status = "ok" if self.ok else "FAIL"
        tail = "" if self.counterexample is None else f"\n{self.counterexample}"
        return (f"{status}: {self.schedules} schedules, {self.steps} steps, "
                f"exhausted={self.exhausted}, {self.elapsed:.2f}s{tail}")


class _SimThread:
    """One scenario thread, parked at every atomic operation."""

    __slots__ = ("tid", "body", "gate", "done", "blocked_pred", "exception",
                 "abort", "_coordinator")

    def __init__(self, tid: int, body: Callable[[], None], coordinator):
        self.tid = tid
        self.body = body
        self.gate = threading.Semaphore(0)
        self.done = False
        self.blocked_pred: Optional[Callable[[], bool]] = None
        self.exception: Optional[BaseException] = None
        self.abort = False
        self._coordinator = coordinator

    # Controller protocol, called from inside atomic operations.

    def checkpoint(self) -> None:
        self._park()

    def wait_until(self, predicate: Callable[[], bool]) -> None:
        self.blocked_pred = predicate
        self._park()

    def _park(self) -> None:
        if self.abort:
            raise _AbortRun
        self._coordinator.wake.release()
        self.gate.acquire()
        if self.abort:
            raise _AbortRun

    # Runs on the pooled worker thread.

    def run(self) -> None:
        self.gate.acquire()
        set_controller(self)
        try:
            if not self.abort:
                self.body()
        except _AbortRun:
            pass
        except BaseException as exc:  # recorded as the run's verdict
            self.exception = exc
        finally:
            set_controller(None)
            self.done = True
            self._coordinator.wake.release()


class _WorkerPool:
    """Reusable daemon threads; spawning per run would dominate exploration."""

    def __init__(self):
        self._lock = threading.Lock()
        self._idle: list[_Worker] = []

    def submit(self, task: Callable[[], None]) -> None:
        with self._lock:
            worker = self._idle.pop() if self._idle else None
        if worker is None:
            worker = _Worker(self)
            worker.start()
        worker.assign(task)

    def _recycle(self, worker: "_Worker") -> None:
        with self._lock:
            self._idle.append(worker)


class _Worker(threading.Thread):
    def __init__(self, pool: _WorkerPool):
        super().__init__(daemon=True)
        self._pool = pool
        self._task_ready = threading.Semaphore(0)
        self._task: Optional[Callable[[], None]] = None

    def assign(self, task: Callable[[], None]) -> None:
        self._task = task
        self._task_ready.release()

    def run(self) -> None:
        while True:
            self._task_ready.acquire()
            task, self._task = self._task, None
            task()
            self._pool._recycle(self)


_pool = _WorkerPool()


@dataclass
class _Decision:
    candidates: tuple[int, ...]
    index: int = 0


class _Coordinator:
    """Executes one schedule of one scenario."""

    def __init__(self, scenario: Scenario, max_steps: int):
        self.scenario = scenario
        self.max_steps = max_steps
        self.wake = threading.Semaphore(0)

    def run(self, chooser) -> tuple[Optional[Counterexample], list[int], int]:
        """Drive one run; chooser(candidates, prev_tid, step_index) -> tid.

        Returns (counterexample or None, schedule, steps). The chooser only
        sees moments with a real choice; forced moves are taken silently.
        """
        state = self.scenario.setup()
        sims = [_SimThread(i, _bind(body, state), self)
                for i, body in enumerate(self.scenario.threads)]
        for sim in sims:
            _pool.submit(sim.run)
        schedule: list[int] = []
        steps = 0
        prev_tid: Optional[int] = None
        verdict: Optional[Counterexample] = None
        while True:
            pending = [s for s in sims if not s.done]
            if not pending:
                break
            runnable = [s for s in sims
                        if not s.done and (s.blocked_pred is None
                                           or s.blocked_pred())]
            if not runnable:
                blocked = [s.tid for s in pending]
                verdict = Counterexample(
                    "deadlock",
                    f"threads {blocked} blocked with no runnable thread",
                    schedule)
                break
            if len(runnable) == 1:
                sim = runnable[0]
            else:
                # Put the previously-running thread first so depth-first
                # exploration tries switch-free continuations before
                # preemptions.
                ordered = sorted((s.tid for s in runnable),
                                 key=lambda t: (t != prev_tid, t))
                sim = sims[chooser(tuple(ordered), prev_tid, steps)]
            schedule.append(sim.tid)
            steps += 1
            sim.blocked_pred = None
            sim.gate.release()
            self.wake.acquire()
            prev_tid = sim.tid
            if sim.done and sim.exception is not None:
                verdict = Counterexample(
                    "exception", repr(sim.exception), schedule, sim.tid,
                    details="".join(traceback.format_exception(sim.exception)))
                break
            if steps >= self.max_steps:
                verdict = Counterexample(
                    "livelock", f"no termination within {self.max_steps} steps",
                    schedule)
                break
        self._unwind(sims)
        if verdict is None and self.scenario.finalize is not None:
            try:
                self.scenario.finalize(state)
            except BaseException as exc:
                verdict = Counterexample(
                    "finalize", repr(exc), schedule,
                    details="".join(traceback.format_exception(exc)))
        return verdict, schedule, steps

    def _unwind(self, sims: list[_SimThread]) -> None:
        """Abort still-parked threads so pooled workers come back clean."""
        for _ in range(10_000):
            alive = [s for s in sims if not s.done]
            if not alive:
                return
            for sim in alive:
                sim.abort = True
                sim.gate.release()
                self.wake.acquire()


def _bind(body: Callable[[Any], None], state: Any) -> Callable[[], None]:
    return lambda: body(state)


def explore_interleavings(scenario: Scenario, *,
                          max_preemptions: Optional[int] = None,
                          max_schedules: Optional[int] = None,
                          random_runs: Optional[int] = None,
                          seed: int = 0,
                          max_steps: int = _MAX_STEPS_DEFAULT) -> ExploreResult:
    """Check a scenario over many interleavings.

    With ``random_runs`` unset this walks the schedule tree depth-first:
    exhaustively when ``max_preemptions`` is None, else visiting every
    schedule with at most that many switches away from a runnable thread.
    ``max_schedules`` caps the walk (the result then reports
    ``exhausted=False``).  With ``random_runs=N`` it instead samples N
    schedules from ``seed``.

    Stops at the first counterexample.
    """
    started = time.perf_counter()
    coordinator = _Coordinator(scenario, max_steps)
    schedules = 0
    total_steps = 0

    if random_runs is not None:
        for run_index in range(random_runs):
            # Arithmetic derivation: tuple seeds go through hash() and are
            # not stable across interpreter runs.
            rng = random.Random(seed * 2_654_435_761 + run_index)
            preempts = [0]

            def chooser(candidates, prev_tid, _step):
                if (max_preemptions is not None and prev_tid in candidates
                        and preempts[0] >= max_preemptions):
                    return prev_tid
                pick = rng.choice(candidates)
                if prev_tid in candidates and pick != prev_tid:
                    preempts[0] += 1
                return pick

            verdict, _, steps = coordinator.run(chooser)
            schedules += 1
            total_steps += steps
            if verdict is not None:
                return ExploreResult(False, schedules, total_steps, False,
                                     verdict, time.perf_counter() - started)
        return ExploreResult(True, schedules, total_steps, False, None,
                             time.perf_counter() - started)

    # Depth-first over decision points, replaying the recorded prefix.
    stack: list[_Decision] = []
    capped = False
    while True:
        cursor = [0]
        preemptions = [0]

        def chooser(candidates, prev_tid, _step):
            if (max_preemptions is not None and prev_tid in candidates
                    and preemptions[0] >= max_preemptions):
                return prev_tid
            if cursor[0] < len(stack):
                node = stack[cursor[0]]
                assert node.candidates == candidates, (
                    "non-deterministic scenario: replay diverged")
            else:
                node = _Decision(candidates)
                stack.append(node)
            cursor[0] += 1
            pick = node.candidates[node.index]
            if prev_tid in candidates and pick != prev_tid:
                preemptions[0] += 1
            return pick

        verdict, _, steps = coordinator.run(chooser)
        schedules += 1
        total_steps += steps
        if verdict is not None:
            return ExploreResult(False, schedules, total_steps, False,
                                 verdict, time.perf_counter() - started)
        if max_schedules is not None and schedules >= max_schedules:
            capped = True
            break
        del stack[cursor[0]:]  # decisions past this run's horizon are stale
        while stack and stack[-1].index == len(stack[-1].candidates) - 1:
            stack.pop()
        if not stack:
            break
        stack[-1].index += 1
    return ExploreResult(True, schedules, total_steps, not capped, None,
                         time.perf_counter() - started)


def run_with_schedule(scenario: Scenario, schedule: Sequence[int],
                      max_steps: int = _MAX_STEPS_DEFAULT) -> Optional[Counterexample]:
    """Replay an explicit schedule (e.g. from a counterexample).

    The schedule lists the thread index of every step; once it is used up,
    remaining steps follow the lowest runnable thread.
    """
    coordinator = _Coordinator(scenario, max_steps)
    recorded = list(schedule)

    def chooser(candidates, prev_tid, step_index):
        # The recorded schedule lists every step, forced moves included, so
        # the coordinator's step index addresses it directly.
        if step_index < len(recorded) and recorded[step_index] in candidates:
            return recorded[step_index]
        return candidates[0]

    verdict, _, _ = coordinator.run(chooser)
    return verdict
