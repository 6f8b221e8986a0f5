"""Queue spinlocks used as fair-mutex baselines in the benchmark CLI.

CLH and MCS are the classic fair locks whose contention behaviour the
waiter-queue mutex is measured against: both hand the lock over in strict
arrival order and each waiter spins on its own flag, so they make an honest
apples-to-apples baseline for a FIFO mutex.

Spinning on a Python thread that never releases the interpreter would
starve everyone else, so every spin iteration yields with ``time.sleep(0)``.
That makes absolute numbers slower than a native spinlock but keeps the
*relative* comparison meaningful: the queue mutex pays the same yield tax
inside its own retry loops.
"""

from __future__ import annotations

import threading
import time

from ..atomics import AtomicRef

__all__ = ["ClhLock", "McsLock"]


class _ClhNode:
    __slots__ = ("locked",)

    def __init__(self):
        self.locked = False


class ClhLock:
    """CLH queue lock: spin on the predecessor's flag, implicit queue.

    Each thread owns a node; ``lock`` publishes it as the new tail and spins
    until the previous tail clears its flag.  The released node is recycled
    as the thread's next one (the standard CLH node swap), so the lock
    allocates only on first use per thread.
    """

    def __init__(self):
        self._tail = AtomicRef(_ClhNode())
        self._tls = threading.local()

    def _slot(self):
        slot = getattr(self._tls, "slot", None)
        if slot is None:
            slot = {"node": _ClhNode(), "pred": None}
            self._tls.slot = slot
        return slot

    def lock(self) -> None:
        slot = self._slot()
        node = slot["node"]
        node.locked = True
        pred = self._tail.exchange(node)
        slot["pred"] = pred
        while pred.locked:
            time.sleep(0)

    def unlock(self) -> None:
        slot = self._slot()
        node = slot["node"]
        node.locked = False
        # Recycle the predecessor node; ours may still be observed by the
        # thread that enqueued behind us.
        slot["node"] = slot["pred"]
        slot["pred"] = None


class _McsNode:
    __slots__ = ("next", "locked")

    def __init__(self):
        self.next = None
        self.locked = False


class McsLock:
    """MCS queue lock: explicit successor links, spin on your own flag."""

    def __init__(self):
        self._tail = AtomicRef(None)
        self._tls = threading.local()

    def _node(self) -> _McsNode:
        node = getattr(self._tls, "node", None)
        if node is None:
            node = _McsNode()
            self._tls.node = node
        return node

    def lock(self) -> None:
        node = self._node()
        node.next = None
        node.locked = True
        pred = self._tail.exchange(node)
        if pred is not None:
            pred.next = node
            while node.locked:
                time.sleep(0)

    def unlock(self) -> None:
        node = self._node()
        if node.next is None:
            # No visible successor; try to swing the tail back to empty.
            if self._tail.compare_and_set(node, None):
                return
            # A successor is between the tail swap and the link write.
            while node.next is None:
                time.sleep(0)
        node.next.locked = False
        node.next = None
