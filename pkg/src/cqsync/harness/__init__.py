"""Deterministic concurrency checking for the waiter-queue primitives.

``explore`` drives scenario threads one atomic step at a time and either
enumerates interleavings exhaustively (optionally preemption-bounded) or
samples them randomly; failures come back as replayable schedules.
``scenarios`` turns per-thread op programs over the shipped primitives into
instrumented scenarios; ``fixtures`` holds intentionally broken designs the
suite must be able to catch; ``oracle`` replays sequential traces against
reference models; ``stress`` runs free-running multi-thread workloads with
exact accounting.
"""

from .explore import (Counterexample, ExploreResult, Scenario,
                      explore_interleavings, run_with_schedule)
from .fixtures import NaiveMutex, NaiveSkipCqs, mutex_cancel_unlock_scenario
from .scenarios import (barrier_scenario, generate_two_thread_family,
                        latch_scenario, load_scenario, mutex_scenario,
                        pool_scenario, semaphore_scenario)

__all__ = [
    "Counterexample", "ExploreResult", "Scenario", "explore_interleavings",
    "run_with_schedule",
    "NaiveMutex", "NaiveSkipCqs", "mutex_cancel_unlock_scenario",
    "barrier_scenario", "generate_two_thread_family", "latch_scenario",
    "load_scenario", "mutex_scenario", "pool_scenario", "semaphore_scenario",
]
