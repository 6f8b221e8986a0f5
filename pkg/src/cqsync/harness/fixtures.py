"""Deliberately broken reference designs for exercising the explorer.

``NaiveSkipCqs`` implements the obvious cancellation scheme: the cancel
handler marks its cell and rolls the owner's permit counter back
unconditionally, and resume silently skips any cell whose waiter it cannot
complete.  The two sides never agree on who owns the in-flight permit, so a
resume racing with a cancellation can both deposit its permit for a future
suspender *and* see the counter rolled back — manufacturing a second permit
out of thin air.  ``NaiveMutex`` wraps it the same way the real mutex wraps
the smart queue; ``mutex_cancel_unlock_scenario`` is the three-step program
(lock+cancel racing an unlock) whose exploration exhibits the double grant.

These exist so the test suite can demonstrate the explorer *finds* the bug
in the naive design and clears the shipped one on the same scenario.
"""

from __future__ import annotations

from typing import Any, Callable

from ..atomics import AtomicInt, AtomicRef
from ..core import (CANCELLED, CancelMode, Cqs, CqsStats, RESUMED, ResumeMode,
                    _Box)
from ..futures import ImmediateResult, PENDING, Request, UNIT
from ..segments import Segment
from .explore import Scenario


class NaiveSkipCqs(Cqs):
    """Waiter queue with uncoordinated cancellation (intentionally wrong)."""

    def _on_request_cancelled(self, segment: Segment, cell: AtomicRef,
                              request: Request) -> None:
        if self._stats:
            self._stats.bump("cancels")
        old = self._exchange_cell(cell, CANCELLED)
        assert old is request
        segment.on_cancelled_cell()
        # Roll the owner's counter back unconditionally — without asking
        # whether a resume already committed a permit to this waiter.
        self._on_cancellation()

    def _resume_cell(self, cell: AtomicRef, value: Any):
        while True:
            cur = cell.load()
            if cur is None:
                box = _Box(value)
                if self._cas_cell(cell, None, box):
                    if self._resume_mode is ResumeMode.ASYNC:
                        return True
                    return self._sync_rendezvous(cell, box)
                continue
            if isinstance(cur, Request):
                if cur.complete(value):
                    old = self._exchange_cell(cell, RESUMED)
                    assert old is cur
                    if self._stats:
                        self._stats.bump("completed")
                    return True
                return None  # cancel won the slot race: just move on
            if cur is CANCELLED:
                return None  # skip without telling anyone
            raise AssertionError(f"naive resume hit {cur!r}")


class NaiveMutex:
    """Mutex over ``NaiveSkipCqs``; breaks under cancel/unlock races."""

    def __init__(self, segment_size: int = 2):
        self._state = AtomicInt(1)
        self.stats = CqsStats()
        self._cqs = NaiveSkipCqs(
            resume_mode=ResumeMode.ASYNC, cancel_mode=CancelMode.SMART,
            segment_size=segment_size,
            on_cancellation=self._roll_back,
            complete_refused_resume=self._never_refuses,
            stats=self.stats)

    def _roll_back(self) -> bool:
        self._state.fetch_and_add(1)
        return True

    def _never_refuses(self, value: Any) -> None:
        raise AssertionError("the naive design never refuses a resume")

    def lock(self):
        state = self._state.fetch_and_add(-1)
        if state >= 1:
            return ImmediateResult(UNIT)
        future = self._cqs.suspend()
        assert future is not None  # async mode: no broken rendezvous
        return future

    def unlock(self) -> None:
        state = self._state.fetch_and_add(1)
        if state < 0:
            self._cqs.resume(UNIT)


class _RaceCtx:
    def __init__(self, mutex: Any):
        self.mutex = mutex
        self.locker_owns = False


def mutex_cancel_unlock_scenario(
        make_mutex: Callable[[], Any],
        name: str = "lock+cancel vs unlock") -> Scenario:
    """One thread cancels a contended lock request while another unlocks.

    The scenario starts with the mutex held.  At quiescence exactly one
    ownership claim may exist across the cancelling thread and two probe
    lock attempts; any second claim is a manufactured permit.
    """

    def setup() -> _RaceCtx:
        mutex = make_mutex()
        first = mutex.lock()
        assert isinstance(first, ImmediateResult)
        return _RaceCtx(mutex)

    def locker(ctx: _RaceCtx) -> None:
        future = ctx.mutex.lock()
        if isinstance(future, ImmediateResult):
            ctx.locker_owns = True
        elif not future.cancel():
            assert future.get() is UNIT
            ctx.locker_owns = True

    def unlocker(ctx: _RaceCtx) -> None:
        ctx.mutex.unlock()

    def finalize(ctx: _RaceCtx) -> None:
        owners = int(ctx.locker_owns)
        for _ in range(2):
            probe = ctx.mutex.lock()
            if isinstance(probe, ImmediateResult) or probe.get() is not PENDING:
                owners += 1
        assert owners == 1, f"mutual exclusion broken: {owners} permit owners"
        stats = ctx.mutex.stats
        if stats is not None:
            assert stats.balance() == 0, (
                f"delivery balance broken: {stats.snapshot()}")

    return Scenario(name, setup, [locker, unlocker], finalize)
