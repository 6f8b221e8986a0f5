"""Completion handles returned by suspending operations.

Two kinds exist.  :class:`ImmediateResult` carries a value that was already
available, so the operation never really suspended; cancelling it always
fails.  :class:`Request` represents a parked waiter: it completes at most
once, can be cancelled exactly once before completion, and runs a
cancellation handler synchronously inside the winning ``cancel()`` call so
the owning synchronizer can clean up its cell before ``cancel`` returns.

``get()`` never blocks: it returns the result, or :data:`PENDING`, or
:data:`CANCELLED`.  ``blocking_get()`` parks the calling thread on a lazily
created event (or on the cooperative scheduler when one is driving the
thread) and returns the result or :data:`CANCELLED`.
"""

from __future__ import annotations

import threading
from typing import Any, Callable, Optional

from .atomics import AtomicRef, current_controller, wait_until


class _Mark:
    """Named singleton marker."""

    __slots__ = ("_name",)

    def __init__(self, name: str):
        self._name = name

    def __repr__(self) -> str:
        return f"<{self._name}>"


PENDING = _Mark("PENDING")
CANCELLED = _Mark("CANCELLED")

#: Token passed through futures by primitives that transfer permission, not data.
UNIT = _Mark("UNIT")


class ImmediateResult:
    """Already-completed handle; the suspending fast path returns these."""

    __slots__ = ("_result",)

    def __init__(self, result: Any):
        self._result = result

    def get(self) -> Any:
        return self._result

    def blocking_get(self) -> Any:
        return self._result

    def cancel(self) -> bool:
        return False

    def complete(self, result: Any) -> bool:
        raise AssertionError("complete() on an already-immediate result")

    def __repr__(self) -> str:
        return f"ImmediateResult({self._result!r})"


class Request:
    """Parked waiter: completes once, or cancels once before completion.

    The slot holds PENDING, then exactly one of a result or CANCELLED; the
    transition is a single CAS, so complete/cancel race deterministically.
    A winning ``cancel()`` invokes the cancellation handler synchronously
    and only then returns True.
    """

    __slots__ = ("_slot", "_on_cancel", "_event")

    def __init__(self, on_cancel: Optional[Callable[[], None]] = None):
        self._slot = AtomicRef(PENDING)
        self._on_cancel = on_cancel
        self._event = AtomicRef(None)

    def get(self) -> Any:
        """Result if completed, else PENDING or CANCELLED. Never blocks."""
        return self._slot.load()

    def complete(self, result: Any) -> bool:
        """Deliver ``result``; False if already completed or cancelled."""
        if not self._slot.compare_and_set(PENDING, result):
            return False
        self._signal()
        return True

    def cancel(self) -> bool:
        """Abort the wait; False if the result already arrived (or cancelled)."""
        if not self._slot.compare_and_set(PENDING, CANCELLED):
            return False
        self._signal()
        if self._on_cancel is not None:
            self._on_cancel()
        return True

    def blocking_get(self) -> Any:
        """Park until completed or cancelled; returns the result or CANCELLED."""
        value = self._slot.load()
        if value is not PENDING:
            return value
        if current_controller() is not None:
            wait_until(lambda: self._slot.load_relaxed() is not PENDING)
            return self._slot.load()
        event = self._event.load()
        if event is None:
            fresh = threading.Event()
            if self._event.compare_and_set(None, fresh):
                event = fresh
            else:
                event = self._event.load()
        # Re-check: completion may have slipped in before the event existed.
        value = self._slot.load()
        if value is not PENDING:
            return value
        event.wait()
        return self._slot.load()

    def _signal(self) -> None:
        event = self._event.load()
        if event is not None:
            event.set()

    def __repr__(self) -> str:
        return f"Request({self._slot.load_relaxed()!r})"
