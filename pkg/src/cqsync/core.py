"""FIFO queue of cancellable waiters with O(1) cancelled-range skipping.

The queue pairs two counters over an unbounded cell array (built from
segments, see ``cqsync.segments``): ``suspend`` claims the next free cell
and parks a waiter there, ``resume`` claims the next occupied cell and
delivers a value to it.  Cells move through a small life-cycle::

    EMPTY ──suspend──> REQUEST ──complete──> RESUMED
      │                   │ cancel──> CANCELLED or REFUSED
      │                   └─(smart async delegation)──> VALUE
      └──resume───> VALUE ──taken by suspend──> TAKEN
                      │──sync timeout──> BROKEN ──observed──> TAKEN
                      └─(cancel handler won the race)──> CANCELLED/REFUSED

Resumption mode picks what happens when resume outruns suspend into an
empty cell: ASYNC leaves the value for the suspender and returns
immediately; SYNC waits (bounded spin) for the rendezvous and poisons the
cell on timeout, failing the resume.  SYNC is what makes non-blocking "try"
operations on top of the queue behave: a returned permit is never left
parked in a cell while the owner thinks the release finished.

Cancellation mode picks what resume does when it lands on a cancelled
waiter: SIMPLE just fails (callers re-issue), SMART consults the owning
synchronizer via ``on_cancellation`` at cancel time and either marks the
cell skippable (resume passes over whole cancelled segments in O(1)) or
refuses future resumes, handing their value back through
``complete_refused_resume``.
"""

from __future__ import annotations

import enum
import threading
from typing import Any, Callable, Optional

from .atomics import AtomicRef, wait_until
from .futures import ImmediateResult, Request, _Mark
from .segments import DEFAULT_SEGMENT_SIZE, Segment, SegmentList

# Cell markers. TAKEN/RESUMED/CANCELLED/REFUSED are terminal; BROKEN only
# transitions to TAKEN when the late suspender observes the poisoned cell.
TAKEN = _Mark("TAKEN")
BROKEN = _Mark("BROKEN")
RESUMED = _Mark("RESUMED")
CANCELLED = _Mark("CANCELLED")
REFUSED = _Mark("REFUSED")

DEFAULT_MAX_SPIN_CYCLES = 100


class ResumeMode(enum.Enum):
    ASYNC = "async"
    SYNC = "sync"


class CancelMode(enum.Enum):
    SIMPLE = "simple"
    SMART = "smart"


class _Box:
    """Wrapper for deposited values so user data never collides with markers."""

    __slots__ = ("value",)

    def __init__(self, value: Any):
        self.value = value

    def __repr__(self) -> str:
        return f"_Box({self.value!r})"


class CqsStats:
    """Operation counters; consistent at quiescence.

    The delivery-balance identity holds whenever no operation is in flight::

        resume_true - delegated == completed + refused

    ``delegated`` counts a cancellation handler adopting a value it found in
    its cell (it then re-runs resume itself, so the adopting resume's success
    and the re-run's success would otherwise double-count one delivery).
    """

    __slots__ = ("_lock", "suspends", "cancels", "resume_true", "resume_false",
                 "completed", "refused", "delegated", "broken")

    def __init__(self):
        self._lock = threading.Lock()
        self.suspends = 0
        self.cancels = 0
        self.resume_true = 0
        self.resume_false = 0
        self.completed = 0
        self.refused = 0
        self.delegated = 0
        self.broken = 0

    def bump(self, field: str) -> None:
        with self._lock:
            setattr(self, field, getattr(self, field) + 1)

    def balance(self) -> int:
        """Zero at quiescence."""
        with self._lock:
            return self.resume_true - self.delegated - self.completed - self.refused

    def suspend_conservation(self) -> int:
        """Zero at quiescence: every suspend completed, cancelled, or broke."""
        with self._lock:
            return self.suspends - self.completed - self.cancels - self.broken

    def snapshot(self) -> dict:
        with self._lock:
            return {f: getattr(self, f) for f in self.__slots__ if f != "_lock"}


# (old-label, new-label) pairs a cell may legally go through.
_EMPTY, _VALUE, _REQUEST = "EMPTY", "VALUE", "REQUEST"
_ALLOWED_TRANSITIONS = frozenset({
    (_EMPTY, _REQUEST),       # suspend parks a waiter
    (_EMPTY, _VALUE),         # resume outruns suspend, deposits the value
    (_VALUE, "TAKEN"),        # suspend picks up the deposited value
    (_VALUE, "BROKEN"),       # sync resume gives up waiting for the rendezvous
    (_VALUE, "CANCELLED"),    # cancel handler found a delegated value
    (_VALUE, "REFUSED"),      # cancel handler refuses, hands the value back
    (_REQUEST, "RESUMED"),    # resume completed the waiter
    (_REQUEST, _VALUE),       # smart async resume delegates to the canceller
    (_REQUEST, "CANCELLED"),  # cancel handler marks the cell skippable
    (_REQUEST, "REFUSED"),    # cancel handler refuses future resumes
    ("BROKEN", "TAKEN"),      # late suspender observes the poisoned cell
})


def _label(value: Any) -> str:
    if value is None:
        return _EMPTY
    if isinstance(value, _Box):
        return _VALUE
    if isinstance(value, Request):
        return _REQUEST
    if isinstance(value, _Mark):
        return repr(value)[1:-1]
    raise AssertionError(f"foreign value in cell: {value!r}")


_callback_guard = threading.local()


class Cqs:
    """The cancellable waiter queue.

    Args:
        resume_mode: ASYNC (deposit and go) or SYNC (bounded rendezvous).
        cancel_mode: SIMPLE (resume fails on cancelled waiters) or SMART
            (resume skips or is refused, per ``on_cancellation``).
        on_cancellation: SMART only. Runs inside the winning ``cancel()``;
            returns True if the waiter was deregistered from the owning
            synchronizer (resumes may skip the cell) or False if a resume is
            already on its way and must be refused.
        complete_refused_resume: SMART only. Receives the value of a refused
            resume; must be non-blocking and must not re-enter the same cell.
        validate_transitions: check every cell transition against the
            life-cycle edge set (on by default, stripped with ``-O``).

    ``suspend``/``resume`` require external accounting: call ``resume`` only
    when a (possibly in-flight) ``suspend`` is guaranteed to pair with it,
    the way the shipped primitives drive it off a permit counter.
    """

    def __init__(self,
                 resume_mode: ResumeMode = ResumeMode.ASYNC,
                 cancel_mode: CancelMode = CancelMode.SIMPLE,
                 segment_size: int = DEFAULT_SEGMENT_SIZE,
                 max_spin_cycles: int = DEFAULT_MAX_SPIN_CYCLES,
                 on_cancellation: Optional[Callable[[], bool]] = None,
                 complete_refused_resume: Optional[Callable[[Any], None]] = None,
                 stats: Optional[CqsStats] = None,
                 validate_transitions: bool = __debug__):
        if cancel_mode is CancelMode.SMART:
            if on_cancellation is None or complete_refused_resume is None:
                raise ValueError("smart cancellation needs on_cancellation "
                                 "and complete_refused_resume")
        self._resume_mode = resume_mode
        self._cancel_mode = cancel_mode
        self._segment_size = segment_size
        self._max_spin_cycles = max_spin_cycles
        self._on_cancellation = on_cancellation
        self._complete_refused_resume = complete_refused_resume
        self._stats = stats
        self._validate = validate_transitions
        self._list = SegmentList(segment_size)
        self._suspend_iter, self._resume_iter = self._list.iterators

    @property
    def resume_mode(self) -> ResumeMode:
        return self._resume_mode

    @property
    def cancel_mode(self) -> CancelMode:
        return self._cancel_mode

    @property
    def stats(self) -> Optional[CqsStats]:
        return self._stats

    # -- suspend ----------------------------------------------------------

    def suspend(self):
        """Park in the next cell; returns a future, or None on a broken cell.

        Returns an ImmediateResult when the pairing resume already deposited
        its value.  None (SYNC mode only) means the pairing resume gave up
        on the rendezvous; the caller re-issues its counter update and tries
        again.
        """
        if self._stats:
            self._stats.bump("suspends")
        found, segment, index = self._list.step(self._suspend_iter)
        assert found, "a suspender's own cell cannot be cancelled before use"
        cell = segment.cells[index % self._segment_size]

        def handler() -> None:
            self._on_request_cancelled(segment, cell, request)

        request = Request(on_cancel=handler)
        if self._cas_cell(cell, None, request):
            return request
        # The pairing resume got here first.
        old = self._exchange_cell(cell, TAKEN)
        if old is BROKEN:
            if self._stats:
                self._stats.bump("broken")
            return None
        assert isinstance(old, _Box), f"suspend found {old!r} in its cell"
        if self._stats:
            self._stats.bump("completed")
        return ImmediateResult(old.value)

    # -- resume -----------------------------------------------------------

    def resume(self, value: Any) -> bool:
        """Deliver ``value`` to the longest-waiting cell.

        False means the delivery failed: the target waiter was cancelled
        (SIMPLE mode) or the rendezvous timed out (SYNC mode); callers
        re-issue their counter update and retry.
        """
        while True:
            found, segment, index = self._list.step(self._resume_iter)
            # Unlink the consumed prefix so passed segments can be collected.
            segment.prev.store(None)
            if not found:
                if self._cancel_mode is CancelMode.SIMPLE:
                    return self._resume_done(False)
                # The whole range up to this segment was cancelled and
                # removed; move the counter past it in one step (losing the
                # race just means another resume already did).
                self._resume_iter.index.compare_and_set(
                    index + 1, segment.id * self._segment_size)
                continue
            cell = segment.cells[index % self._segment_size]
            outcome = self._resume_cell(cell, value)
            if outcome is not None:
                return self._resume_done(outcome)
            # Cancelled cell in SMART mode: take the next index.

    def _resume_done(self, ok: bool) -> bool:
        if self._stats:
            self._stats.bump("resume_true" if ok else "resume_false")
        return ok

    def _resume_cell(self, cell: AtomicRef, value: Any) -> Optional[bool]:
        """One cell's delivery protocol; None means skip to the next cell."""
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
                # The waiter is cancelled; its handler may still be running.
                if self._cancel_mode is CancelMode.SIMPLE:
                    return False
                if self._resume_mode is ResumeMode.SYNC:
                    # Wait for the handler to mark the cell, then re-read.
                    current = cur
                    wait_until(lambda: cell.load_relaxed() is not current)
                    continue
                # Smart async: adopt the cell before the handler marks it;
                # the handler finds the value and finishes the delivery.
                if self._cas_cell(cell, cur, _Box(value)):
                    return True
                continue
            if cur is CANCELLED:
                if self._cancel_mode is CancelMode.SIMPLE:
                    return False
                return None
            if cur is REFUSED:
                self._refuse(value, cell)
                return True
            raise AssertionError(f"resume hit unexpected cell state {cur!r}")

    def _sync_rendezvous(self, cell: AtomicRef, box: _Box) -> bool:
        for _ in range(self._max_spin_cycles):
            if cell.load() is TAKEN:
                return True
        # Suspender still absent: poison the cell and fail the resume.
        if self._cas_cell(cell, box, BROKEN):
            return False
        return True

    # -- cancellation -----------------------------------------------------

    def _on_request_cancelled(self, segment: Segment, cell: AtomicRef,
                              request: Request) -> None:
        if self._stats:
            self._stats.bump("cancels")
        if self._cancel_mode is CancelMode.SIMPLE:
            old = self._exchange_cell(cell, CANCELLED)
            assert old is request
            segment.on_cancelled_cell()
            return
        if self._run_callback(cell, self._on_cancellation):
            # Waiter deregistered: resumes skip this cell.
            old = self._exchange_cell(cell, CANCELLED)
            if old is request:
                segment.on_cancelled_cell()
                return
            # A resume already delegated its value here; pass it on.
            assert isinstance(old, _Box)
            if self._stats:
                self._stats.bump("delegated")
            self.resume(old.value)
        else:
            # A resume is already on its way; it must be told to hand its
            # value back instead of skipping ahead.
            old = self._exchange_cell(cell, REFUSED)
            if old is request:
                return
            assert isinstance(old, _Box)
            self._refuse(old.value, cell)

    def _refuse(self, value: Any, cell: AtomicRef) -> None:
        if self._stats:
            self._stats.bump("refused")
        self._run_callback(cell, self._complete_refused_resume, value)

    def _run_callback(self, cell, callback, *args):
        if not __debug__ or cell is None:
            return callback(*args)
        active = getattr(_callback_guard, "cells", None)
        if active is None:
            active = _callback_guard.cells = []
        assert id(cell) not in active, "callback re-entered its own cell"
        active.append(id(cell))
        try:
            return callback(*args)
        finally:
            active.pop()

    # -- cell transitions (validated in debug builds) ----------------------

    def _cas_cell(self, cell: AtomicRef, old: Any, new: Any) -> bool:
        ok = cell.compare_and_set(old, new)
        if ok and self._validate:
            self._check_edge(old, new)
        return ok

    def _exchange_cell(self, cell: AtomicRef, new: Any) -> Any:
        old = cell.exchange(new)
        if self._validate:
            self._check_edge(old, new)
        return old

    def _check_edge(self, old: Any, new: Any) -> None:
        edge = (_label(old), _label(new))
        assert edge in _ALLOWED_TRANSITIONS, f"illegal cell transition {edge}"

    # -- introspection ------------------------------------------------------

    def suspend_count(self) -> int:
        """Indexes claimed by suspend so far (relaxed read)."""
        return self._suspend_iter.index.load_relaxed()

    def resume_count(self) -> int:
        return self._resume_iter.index.load_relaxed()

    def reachable_segments(self) -> list[Segment]:
        return self._list.reachable_segments()
