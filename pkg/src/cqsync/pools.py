"""Blocking object pools: non-blocking put, suspending take.

A single ``size`` counter carries the whole protocol: positive means
elements are (logically) in the store, negative means takers are parked in
the waiter queue.  ``put`` either hands its element straight to the longest
waiting taker or inserts it into the store; ``take`` either retrieves from
the store or parks.  The store itself is only best-effort: an insert and a
retrieve that the counter paired can still miss each other, in which case
the slot is poisoned and both sides re-run the counter step, keeping the
accounting exact.

Cancelled takes roll the counter back; a delivery refused by a racing
cancellation re-inserts its element, so no element is ever lost or
duplicated.  Elements must not be None.

Two stores ship: :class:`QueuePool` (FIFO, slots live in the same
segment-list structure the waiter queue uses, so exhausted slot ranges are
unlinked) and :class:`StackPool` (LIFO Treiber stack whose retrieve-side
misses push poison nodes instead of spinning).
"""

from __future__ import annotations

from typing import Any, Optional

from .atomics import AtomicInt, AtomicRef
from .core import CancelMode, Cqs, CqsStats, ResumeMode
from .futures import ImmediateResult, _Mark
from .segments import SegmentList

#: Poison marker for store slots whose insert/retrieve pair missed.
BROKEN_SLOT = _Mark("BROKEN_SLOT")

_ABSENT = _Mark("ABSENT")


class _PoolBase:
    """Counter protocol shared by both stores."""

    def __init__(self, *, segment_size: int = 16,
                 stats: Optional[CqsStats] = None):
        self._size = AtomicInt(0)
        self._cqs = Cqs(ResumeMode.ASYNC, CancelMode.SMART,
                        segment_size=segment_size,
                        on_cancellation=self._on_cancellation,
                        complete_refused_resume=self._refused,
                        stats=stats)

    @property
    def cqs(self) -> Cqs:
        return self._cqs

    def put(self, element: Any) -> None:
        """Add ``element``; never blocks."""
        assert element is not None, "pool elements must not be None"
        while True:
            size = self._size.fetch_and_add(1)
            if size < 0:
                delivered = self._cqs.resume(element)
                assert delivered
                return
            if self._try_insert(element):
                return
            # The slot was poisoned by a missed retrieve; that retrieve
            # re-runs its counter step, so re-run ours.

    def take(self):
        """Future completing with an element (immediately if one is stored)."""
        while True:
            size = self._size.fetch_and_add(-1)
            if size > 0:
                element = self._try_retrieve()
                if element is not _ABSENT:
                    return ImmediateResult(element)
                continue
            future = self._cqs.suspend()
            assert future is not None
            return future

    def size(self) -> int:
        """Relaxed counter snapshot (negative: that many parked takers)."""
        return self._size.load_relaxed()

    def _on_cancellation(self) -> bool:
        size = self._size.fetch_and_add(1)
        return size < 0

    def _refused(self, element: Any) -> None:
        # Hand the undeliverable element back to the store; must not block.
        if not self._try_insert(element):
            self.put(element)

    def _try_insert(self, element: Any) -> bool:
        raise NotImplementedError

    def _try_retrieve(self) -> Any:
        raise NotImplementedError


class QueuePool(_PoolBase):
    """FIFO pool; elements live in an unbounded slot array of segments.

    Every slot is eventually either consumed or poisoned by its retrieve,
    and both count toward the segment's exhaustion, so fully-passed segments
    unlink themselves and memory tracks the live element count.
    """

    def __init__(self, *, segment_size: int = 16,
                 stats: Optional[CqsStats] = None):
        super().__init__(segment_size=segment_size, stats=stats)
        self._slots = SegmentList(segment_size)
        self._insert_iter, self._retrieve_iter = self._slots.iterators

    def _try_insert(self, element: Any) -> bool:
        found, segment, index = self._slots.step(self._insert_iter)
        if not found:
            # The paired retrieve already poisoned this slot's whole range.
            return False
        cell = segment.cells[index % self._slots.segment_size]
        return cell.compare_and_set(None, element)

    def _try_retrieve(self) -> Any:
        found, segment, index = self._slots.step(self._retrieve_iter)
        assert found, "a slot is only poisoned by its own retrieve"
        segment.prev.store(None)
        cell = segment.cells[index % self._slots.segment_size]
        element = cell.exchange(BROKEN_SLOT)
        # Consumed or poisoned, the slot is dead either way; count it so
        # fully-dead segments unlink.
        segment.on_cancelled_cell()
        if element is None:
            return _ABSENT
        return element


class StackPool(_PoolBase):
    """LIFO pool on a Treiber stack.

    A retrieve that finds the stack empty pushes a poison node; the insert
    it missed pops that node and fails, re-running its counter step.  This
    keeps both sides lock-free without slot indexes.
    """

    class _Node:
        __slots__ = ("element", "below")

        def __init__(self, element: Any, below):
            self.element = element
            self.below = below

    def __init__(self, *, stats: Optional[CqsStats] = None):
        super().__init__(stats=stats)
        self._top = AtomicRef(None)

    def _try_insert(self, element: Any) -> bool:
        while True:
            top = self._top.load()
            if top is not None and top.element is BROKEN_SLOT:
                if self._top.compare_and_set(top, top.below):
                    return False
            else:
                if self._top.compare_and_set(top, self._Node(element, top)):
                    return True

    def _try_retrieve(self) -> Any:
        while True:
            top = self._top.load()
            if top is None or top.element is BROKEN_SLOT:
                if self._top.compare_and_set(top, self._Node(BROKEN_SLOT, top)):
                    return _ABSENT
            else:
                if self._top.compare_and_set(top, top.below):
                    return top.element
