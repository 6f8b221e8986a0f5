"""Synchronization primitives built on the cancellable waiter queue.

Each primitive keeps its own atomic permit/progress counter and uses the
queue purely as FIFO storage for the waiters the counter said must park.
The counter update happens first and decides suspend-vs-fastpath (or
resume-vs-nothing); the queue then pairs the two sides even when they race.

Semaphore and Mutex come in two flavours selected at construction:

* ``sync=False`` (default): released permits are handed to waiters through
  the cell asynchronously.  Cheapest, but a permit can sit in a cell for a
  moment while its owner is between the counter update and the park, so
  non-blocking try-acquire is not offered.
* ``sync=True``: release waits (bounded spin) for the rendezvous and takes
  the permit back on timeout, retrying.  ``try_acquire``/``try_lock`` are
  only available here: a completed release always leaves the permit either
  claimed by a waiter or visible in the counter.
"""

from __future__ import annotations

from typing import Optional

from .atomics import AtomicInt
from .core import CancelMode, Cqs, CqsStats, ResumeMode
from .futures import ImmediateResult, UNIT


class Semaphore:
    """Counting semaphore with FIFO handoff and cancellable acquires.

    ``state`` counts free permits when positive and waiters (negated) when
    negative.  ``acquire`` returns a future completing with UNIT; cancel it
    to leave the queue (the permit accounting is rolled back atomically
    against concurrent releases).
    """

    def __init__(self, permits: int, *, sync: bool = False,
                 simple_cancellation: bool = False,
                 segment_size: int = 16,
                 max_spin_cycles: int = 100,
                 stats: Optional[CqsStats] = None):
        if permits < 1:
            raise ValueError("permits must be >= 1")
        self._permits = permits
        self._sync = sync
        self._state = AtomicInt(permits)
        resume_mode = ResumeMode.SYNC if sync else ResumeMode.ASYNC
        if simple_cancellation:
            self._cqs = Cqs(resume_mode, CancelMode.SIMPLE,
                            segment_size=segment_size,
                            max_spin_cycles=max_spin_cycles, stats=stats)
        else:
            self._cqs = Cqs(resume_mode, CancelMode.SMART,
                            segment_size=segment_size,
                            max_spin_cycles=max_spin_cycles,
                            on_cancellation=self._on_cancellation,
                            complete_refused_resume=self._refused,
                            stats=stats)

    @property
    def permits(self) -> int:
        return self._permits

    @property
    def cqs(self) -> Cqs:
        return self._cqs

    @property
    def stats(self) -> Optional[CqsStats]:
        return self._cqs.stats

    def acquire(self):
        """Take a permit; returns a future completing with UNIT."""
        while True:
            state = self._state.fetch_and_add(-1)
            if state > 0:
                return ImmediateResult(UNIT)
            future = self._cqs.suspend()
            if future is not None:
                return future
            # Sync mode: the pairing release timed out and took the permit
            # back; both counters stayed balanced, so just retry.

    def release(self) -> None:
        """Return a permit, waking the longest waiter if any."""
        while True:
            state = self._state.fetch_and_add(1)
            assert state < self._permits, "release() without a matching acquire()"
            if state >= 0:
                return
            if self._cqs.resume(UNIT):
                return
            # Failed delivery (cancelled waiter in simple mode, or a broken
            # rendezvous in sync mode): the counter traffic that failed is
            # balanced by the other side's retry, so re-issue ours.

    def try_acquire(self) -> bool:
        """Non-blocking acquire; only offered by sync-mode semaphores."""
        if not self._sync:
            raise RuntimeError("try_acquire() needs a sync-mode semaphore; "
                               "construct with sync=True")
        while True:
            state = self._state.load()
            if state <= 0:
                return False
            if self._state.compare_and_set(state, state - 1):
                return True

    # Queue callbacks: cancellation rolls the permit accounting back.

    def _on_cancellation(self) -> bool:
        state = self._state.fetch_and_add(1)
        return state < 0

    def _refused(self, _value) -> None:
        # The cancellation handler already returned the permit to the
        # counter; the refused delivery carries nothing extra.
        pass

    def available_permits(self) -> int:
        """Relaxed snapshot of the counter (negative: that many waiters)."""
        return self._state.load_relaxed()


class Mutex(Semaphore):
    """One-permit semaphore with lock/unlock naming."""

    def __init__(self, *, sync: bool = False, simple_cancellation: bool = False,
                 segment_size: int = 16, max_spin_cycles: int = 100,
                 stats: Optional[CqsStats] = None):
        super().__init__(1, sync=sync, simple_cancellation=simple_cancellation,
                         segment_size=segment_size,
                         max_spin_cycles=max_spin_cycles, stats=stats)

    def lock(self):
        return self.acquire()

    def unlock(self) -> None:
        self.release()

    def try_lock(self) -> bool:
        """Non-blocking lock; only offered by sync-mode mutexes."""
        if not self._sync:
            raise RuntimeError("try_lock() needs a sync-mode mutex; "
                               "construct with sync=True")
        return self._state.compare_and_set(1, 0)


class _NoCancelFuture:
    """View that refuses cancellation; barriers hand these out."""

    __slots__ = ("_inner",)

    def __init__(self, inner):
        self._inner = inner

    def get(self):
        return self._inner.get()

    def blocking_get(self):
        return self._inner.blocking_get()

    def cancel(self) -> bool:
        return False

    def __repr__(self) -> str:
        return f"_NoCancelFuture({self._inner!r})"


class Barrier:
    """Single-use rendezvous for a fixed party count.

    The last arriving party wakes everyone; its own future is already
    complete.  Arrivals cannot be cancelled (cancel() reports failure), and
    arriving more than ``parties`` times is a checked precondition violation.
    """

    def __init__(self, parties: int, *, segment_size: int = 16):
        if parties < 1:
            raise ValueError("parties must be >= 1")
        self.parties = parties
        self._remaining = AtomicInt(parties)
        self._cqs = Cqs(ResumeMode.ASYNC, CancelMode.SIMPLE,
                        segment_size=segment_size)

    @property
    def cqs(self) -> Cqs:
        return self._cqs

    def arrive(self):
        """Report arrival; the returned future completes when all have."""
        remaining = self._remaining.fetch_and_add(-1)
        assert remaining >= 1, "arrive() called more times than parties"
        if remaining > 1:
            future = self._cqs.suspend()
            assert future is not None
            return _NoCancelFuture(future)
        for _ in range(self.parties - 1):
            delivered = self._cqs.resume(UNIT)
            assert delivered, "barrier waiters cannot be cancelled"
        return ImmediateResult(UNIT)


class CountDownLatch:
    """Gate that opens once ``count_down`` has been called ``count`` times.

    ``await_`` returns a future completing with UNIT when the gate opens
    (immediately if it already did).  Waiting can be cancelled; opening the
    gate wakes exactly the waiters registered at that instant, each with one
    delivery.
    """

    _DONE_BIT = 1 << 31

    def __init__(self, count: int, *, segment_size: int = 16,
                 stats: Optional[CqsStats] = None):
        if count < 0:
            raise ValueError("count must be >= 0")
        self._count = AtomicInt(count)
        self._waiters = AtomicInt(0)
        self._cqs = Cqs(ResumeMode.ASYNC, CancelMode.SMART,
                        segment_size=segment_size,
                        on_cancellation=self._on_cancellation,
                        complete_refused_resume=self._refused,
                        stats=stats)

    @property
    def cqs(self) -> Cqs:
        return self._cqs

    @property
    def stats(self) -> Optional[CqsStats]:
        return self._cqs.stats

    def count(self) -> int:
        """Remaining count, floored at zero (relaxed; never goes back up)."""
        return max(self._count.load_relaxed(), 0)

    def count_down(self) -> None:
        remaining = self._count.fetch_and_add(-1)
        if remaining <= 1:
            self._resume_waiters()

    def await_(self):
        """Future completing with UNIT once the count reaches zero."""
        if self._count.load() <= 0:
            return ImmediateResult(UNIT)
        waiters = self._waiters.fetch_and_add(1)
        if waiters & self._DONE_BIT:
            return ImmediateResult(UNIT)
        future = self._cqs.suspend()
        assert future is not None
        return future

    def _resume_waiters(self) -> None:
        # Capture the waiter count and set the done flag in one step; late
        # awaits see the flag and complete immediately, late cancellations
        # see it and are refused.
        while True:
            waiters = self._waiters.load()
            if waiters & self._DONE_BIT:
                return
            if self._waiters.compare_and_set(waiters, waiters | self._DONE_BIT):
                for _ in range(waiters):
                    delivered = self._cqs.resume(UNIT)
                    assert delivered
                return

    def _on_cancellation(self) -> bool:
        waiters = self._waiters.fetch_and_add(-1)
        return (waiters & self._DONE_BIT) == 0

    def _refused(self, _value) -> None:
        # The waiter count the opener captured already includes this waiter;
        # the refused delivery needs no replay.
        pass
