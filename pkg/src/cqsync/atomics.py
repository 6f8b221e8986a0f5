"""Lock-backed atomic cells with a cooperative-scheduling hook.

Every load, store and read-modify-write passes through :func:`checkpoint`.
On plain threads the hook is a single thread-local miss, so production use
pays (almost) nothing.  When a deterministic scheduler registers itself for
the current thread (see ``cqsync.harness.explore``) each access becomes a
context-switch point, which lets the checker enumerate thread interleavings
at exactly atomic-operation granularity.

``AtomicRef`` compares by identity (``is``), mirroring pointer-width CAS;
``AtomicInt`` compares by value.  Spin loops and blocking waits should go
through :func:`wait_until` so the scheduler can park the thread instead of
exploring a useless busy-wait.
"""

from __future__ import annotations

import threading
import time
from typing import Any, Callable

_tls = threading.local()


def current_controller():
    """Return the cooperative scheduler driving this thread, or None."""
    return getattr(_tls, "controller", None)


def set_controller(controller) -> None:
    """Install (or clear, with None) the scheduler hook for this thread."""
    _tls.controller = controller


def checkpoint() -> None:
    """Scheduling point. No-op unless a scheduler is installed."""
    c = getattr(_tls, "controller", None)
    if c is not None:
        c.checkpoint()


def wait_until(predicate: Callable[[], bool]) -> None:
    """Block the calling thread until ``predicate()`` holds.

    Under a scheduler the thread is parked and re-enabled once the predicate
    turns true; on plain threads this is a polite spin.  Predicates must be
    side-effect free and must not take checkpoints (use the ``*_relaxed``
    readers).
    """
    c = getattr(_tls, "controller", None)
    if c is not None:
        c.wait_until(predicate)
        return
    while not predicate():
        time.sleep(0)


class AtomicInt:
    """Atomic integer: load/store/exchange/fetch_and_add/compare_and_set."""

    __slots__ = ("_lock", "_value")

    def __init__(self, value: int = 0):
        self._lock = threading.Lock()
        self._value = value

    def load(self) -> int:
        c = getattr(_tls, "controller", None)
        if c is not None:
            c.checkpoint()
        with self._lock:
            return self._value

    def load_relaxed(self) -> int:
        """Read without a scheduling point; for wait predicates and debug walks."""
        return self._value

    def store(self, value: int) -> None:
        c = getattr(_tls, "controller", None)
        if c is not None:
            c.checkpoint()
        with self._lock:
            self._value = value

    def exchange(self, value: int) -> int:
        c = getattr(_tls, "controller", None)
        if c is not None:
            c.checkpoint()
        with self._lock:
            prior = self._value
            self._value = value
            return prior

    def fetch_and_add(self, delta: int) -> int:
        """Add ``delta``; return the prior value."""
        c = getattr(_tls, "controller", None)
        if c is not None:
            c.checkpoint()
        with self._lock:
            prior = self._value
            self._value = prior + delta
            return prior

    def compare_and_set(self, expected: int, new: int) -> bool:
        c = getattr(_tls, "controller", None)
        if c is not None:
            c.checkpoint()
        with self._lock:
            if self._value == expected:
                self._value = new
                return True
            return False

    def __repr__(self) -> str:
        return f"AtomicInt({self._value!r})"


class AtomicRef:
    """Atomic reference cell. CAS compares by identity, like a pointer CAS."""

    __slots__ = ("_lock", "_value")

    def __init__(self, value: Any = None):
        self._lock = threading.Lock()
        self._value = value

    def load(self) -> Any:
        c = getattr(_tls, "controller", None)
        if c is not None:
            c.checkpoint()
        with self._lock:
            return self._value

    def load_relaxed(self) -> Any:
        return self._value

    def store(self, value: Any) -> None:
        c = getattr(_tls, "controller", None)
        if c is not None:
            c.checkpoint()
        with self._lock:
            self._value = value

    def exchange(self, value: Any) -> Any:
        c = getattr(_tls, "controller", None)
        if c is not None:
            c.checkpoint()
        with self._lock:
            prior = self._value
            self._value = value
            return prior

    def compare_and_set(self, expected: Any, new: Any) -> bool:
        c = getattr(_tls, "controller", None)
        if c is not None:
            c.checkpoint()
        with self._lock:
            if self._value is expected:
                self._value = new
                return True
            return False

    def __repr__(self) -> str:
        return f"AtomicRef({self._value!r})"
