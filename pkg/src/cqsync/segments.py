"""Unbounded cell array built from a linked list of fixed-size segments.

Two counting iterators (one producer-side, one consumer-side) hand out
strictly increasing global cell indexes with a single fetch-and-add each.
Segments whose cells have all been marked cancelled are unlinked from the
list in O(1) amortized so memory stays proportional to the number of live
cells plus the iterators, not to the number of indexes ever claimed.

Bookkeeping per segment is one packed word: bits 16..31 count iterator
handles currently referencing the segment, bits 0..15 count cancelled cells.
A segment is logically removed when all cells are cancelled and no iterator
references it; logical removal triggers physical unlinking.  The tail
segment is never unlinked, which keeps the append path simple.
"""

from __future__ import annotations

from typing import Any, Optional

from .atomics import AtomicInt, AtomicRef

DEFAULT_SEGMENT_SIZE = 16

_POINTER_UNIT = 1 << 16
_CANCELLED_MASK = _POINTER_UNIT - 1


class Segment:
    """Fixed block of cells plus list links and the packed refcount word."""

    __slots__ = ("id", "cells", "next", "prev", "_size", "_state")

    def __init__(self, seg_id: int, size: int, prev: Optional["Segment"],
                 pointers: int = 0):
        self.id = seg_id
        self.cells = [AtomicRef(None) for _ in range(size)]
        self.next: AtomicRef = AtomicRef(None)
        self.prev: AtomicRef = AtomicRef(prev)
        self._size = size
        self._state = AtomicInt(pointers << 16)

    def is_removed(self) -> bool:
        """True once all cells are cancelled and no iterator points here."""
        return self._state.load() == self._size

    def _is_removed_relaxed(self) -> bool:
        return self._state.load_relaxed() == self._size

    def try_inc_pointers(self) -> bool:
        """Pin the segment for an iterator; fails if it is already removed."""
        while True:
            state = self._state.load()
            if state == self._size:
                return False
            if self._state.compare_and_set(state, state + _POINTER_UNIT):
                return True

    def dec_pointers(self) -> bool:
        """Drop one iterator pin; True if that completed the removal condition."""
        prior = self._state.fetch_and_add(-_POINTER_UNIT)
        return prior - _POINTER_UNIT == self._size

    def on_cancelled_cell(self) -> None:
        """Record one cell entering its cancelled state; unlink when full.

        Must be called at most once per cell, so the cancelled count never
        exceeds the segment size.
        """
        prior = self._state.fetch_and_add(1)
        if prior + 1 == self._size:
            self.remove()

    def cancelled_count(self) -> int:
        return self._state.load_relaxed() & _CANCELLED_MASK

    def pointer_count(self) -> int:
        return self._state.load_relaxed() >> 16

    def remove(self) -> None:
        """Physically unlink this (logically removed) segment.

        Neighbours may be getting removed concurrently; whenever the chosen
        alive neighbour turns out to be removed after linking, restart so the
        list never keeps a removed segment reachable.  The tail is left in
        place: append works on it and it becomes removable only after a
        successor exists.
        """
        while True:
            if self.next.load() is None:
                return
            left = self._alive_left()
            right = self._alive_right()
            right.prev.store(left)
            if left is not None:
                left.next.store(right)
            if right.is_removed() and right.next.load() is not None:
                continue
            if left is not None and left.is_removed():
                continue
            return

    def _alive_left(self) -> Optional["Segment"]:
        cur = self.prev.load()
        while cur is not None and cur.is_removed():
            cur = cur.prev.load()
        return cur

    def _alive_right(self) -> "Segment":
        cur = self.next.load()
        while cur.is_removed():
            nxt = cur.next.load()
            if nxt is None:
                break
            cur = nxt
        return cur

    def __repr__(self) -> str:
        state = self._state.load_relaxed()
        return (f"Segment(id={self.id}, pointers={state >> 16}, "
                f"cancelled={state & _CANCELLED_MASK})")


class SegmentIterator:
    """Counting handle into the list: a 64-bit index plus a pinned segment."""

    __slots__ = ("index", "segment")

    def __init__(self, first: Segment):
        self.index = AtomicInt(0)
        self.segment = AtomicRef(first)


class SegmentList:
    """The segment chain plus its two iterators.

    ``step(iterator)`` claims the next global index and locates its segment;
    when the segment holding that index was already removed (every cell in it
    cancelled), it reports ``found=False`` together with the first alive
    segment at or after the index, letting the caller skip the whole
    cancelled range in O(1).
    """

    __slots__ = ("segment_size", "iterators")

    def __init__(self, segment_size: int = DEFAULT_SEGMENT_SIZE):
        if segment_size < 1 or segment_size > _CANCELLED_MASK:
            raise ValueError(f"segment size out of range: {segment_size}")
        self.segment_size = segment_size
        # Both iterators start on the first segment, hence two pins.
        first = Segment(0, segment_size, None, pointers=2)
        self.iterators = (SegmentIterator(first), SegmentIterator(first))

    def step(self, iterator: SegmentIterator) -> tuple[bool, Segment, int]:
        """Claim the next index; return (found, segment, global_index).

        ``found=False`` means every cell from the claimed index up to
        ``segment.id * segment_size`` was cancelled and unlinked; the
        returned segment is the first alive one past that range.
        """
        # The handle must be read before claiming the index: a stale handle
        # only means extra walking, whereas a later handle could already sit
        # past the claimed index's segment.
        start = iterator.segment.load()
        index = iterator.index.fetch_and_add(1)
        target = index // self.segment_size
        segment = self._find_and_move_forward(iterator, start, target)
        return segment.id == target, segment, index

    def find_segment(self, start: Segment, target_id: int) -> Segment:
        """First alive segment with id >= target_id, appending as needed."""
        cur = start
        while cur.id < target_id or cur.is_removed():
            nxt = cur.next.load()
            if nxt is None:
                fresh = Segment(cur.id + 1, self.segment_size, cur)
                if cur.next.compare_and_set(None, fresh):
                    # The old tail may have been logically removed while it
                    # was the tail; now that it has a successor, unlink it.
                    if cur.is_removed():
                        cur.remove()
                    nxt = fresh
                else:
                    nxt = cur.next.load()
            cur = nxt
        return cur

    def move_forward(self, iterator: SegmentIterator, to: Segment) -> bool:
        """Advance the handle to ``to`` (never backwards), repinning.

        Fails only if ``to`` got removed before it could be pinned; callers
        then re-run find_segment, which will skip it.
        """
        while True:
            cur = iterator.segment.load()
            if cur.id >= to.id:
                return True
            if not to.try_inc_pointers():
                return False
            if iterator.segment.compare_and_set(cur, to):
                if cur.dec_pointers():
                    cur.remove()
                return True
            if to.dec_pointers():
                to.remove()

    def _find_and_move_forward(self, iterator: SegmentIterator,
                               start: Segment, target_id: int) -> Segment:
        while True:
            segment = self.find_segment(start, target_id)
            if self.move_forward(iterator, segment):
                return segment

    def reachable_segments(self) -> list[Segment]:
        """All segments reachable from the iterator handles (debug walk).

        Uses relaxed reads; call at quiescence.  Follows both next and prev
        links, since a reachable-via-prev segment is still retained.
        """
        seen: dict[int, Segment] = {}
        stack = [it.segment.load_relaxed() for it in self.iterators]
        while stack:
            seg = stack.pop()
            if seg is None or id(seg) in seen:
                continue
            seen[id(seg)] = seg
            stack.append(seg.next.load_relaxed())
            stack.append(seg.prev.load_relaxed())
        return sorted(seen.values(), key=lambda s: s.id)
