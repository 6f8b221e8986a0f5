"""Cancellable FIFO waiter queue and the synchronization primitives on it.

The core (:class:`Cqs`) stores parked waiters in an unbounded segment array
with O(1) amortized reclamation of fully-cancelled ranges; the primitives
(mutex, semaphore, barrier, count-down latch, blocking pools) drive it off
a single atomic counter each.  ``cqsync.harness`` holds the deterministic
interleaving checker, stress runner and sequential oracles; ``cqsync.bench``
the throughput benchmarks and baseline queue locks.
"""

from .core import (BROKEN, CANCELLED, REFUSED, RESUMED, TAKEN, CancelMode,
                   Cqs, CqsStats, ResumeMode)
from .futures import CANCELLED as FUTURE_CANCELLED
from .futures import PENDING, UNIT, ImmediateResult, Request
from .pools import QueuePool, StackPool
from .primitives import Barrier, CountDownLatch, Mutex, Semaphore
from .segments import DEFAULT_SEGMENT_SIZE, Segment, SegmentList

__all__ = [
    "Cqs", "CqsStats", "ResumeMode", "CancelMode",
    "TAKEN", "BROKEN", "RESUMED", "CANCELLED", "REFUSED",
    "ImmediateResult", "Request", "PENDING", "FUTURE_CANCELLED", "UNIT",
    "Mutex", "Semaphore", "Barrier", "CountDownLatch",
    "QueuePool", "StackPool",
    "SegmentList", "Segment", "DEFAULT_SEGMENT_SIZE",
]

__version__ = "0.1.0"
