"""Reference models and exhaustive sequential-trace equivalence checking.

Each primitive gets a small, obviously-correct model (plain ints and lists,
no atomics).  A *trace* is a sequence of API calls executed one at a time —
no concurrency — and after every call the full observable state of the real
primitive (every issued future's status, the permit/count/size reading) must
equal the model's.  ``check_traces`` enumerates every legal trace up to a
given length and replays each against a fresh primitive/model pair, so a
divergence pins down a minimal sequential repro.

Blocking calls are excluded by construction: a parked future simply stays
parked, which keeps traces executable single-threaded.  Cancellation
branches target the oldest and the newest parked waiter — the two boundary
positions of the live window; interior positions arise from compositions
(cancelling the oldest twice reaches the former second, and so on).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Any, Callable, Iterator, Optional

from ..futures import ImmediateResult, PENDING, UNIT
from ..futures import CANCELLED as FUTURE_CANCELLED
from ..pools import QueuePool, StackPool
from ..primitives import Barrier, CountDownLatch, Semaphore

# Ops are (verb, arg) tuples; arg is a waiter index for cancels, else None.
Op = tuple


# -- models ------------------------------------------------------------------

def _boundary_positions(live_count: int) -> list[int]:
    if live_count == 0:
        return []
    return [0] if live_count == 1 else [0, live_count - 1]


class SemaphoreModel:
    """Counter + FIFO list of parked waiter ids; smart or simple rollback."""

    def __init__(self, permits: int, *, sync: bool = False,
                 simple: bool = False):
        self.permits = permits
        self.sync = sync
        self.simple = simple
        self.state = permits
        self.queue: list[int] = []          # arrival order; simple mode keeps
        self.status: dict[int, tuple] = {}  # cancelled entries in the queue
        self.next_wid = 0
        self.owned = 0

    def copy(self) -> "SemaphoreModel":
        twin = SemaphoreModel(self.permits, sync=self.sync, simple=self.simple)
        twin.state = self.state
        twin.queue = list(self.queue)
        twin.status = dict(self.status)
        twin.next_wid = self.next_wid
        twin.owned = self.owned
        return twin

    def _live(self) -> list[int]:
        return [w for w in self.queue if self.status[w][0] == "parked"]

    def legal_ops(self) -> list[Op]:
        ops: list[Op] = [("acquire", None)]
        if self.owned > 0:
            ops.append(("release", None))
        ops.extend(("cancel", pos)
                   for pos in _boundary_positions(len(self._live())))
        if self.sync:
            ops.append(("try", None))
        return ops

    def apply(self, op: Op) -> Any:
        verb, arg = op
        if verb == "acquire":
            wid = self.next_wid
            self.next_wid += 1
            self.state -= 1
            if self.state >= 0:
                self.status[wid] = ("owned", UNIT)
                self.owned += 1
                return "owned"
            self.queue.append(wid)
            self.status[wid] = ("parked", None)
            return "parked"
        if verb == "release":
            assert self.owned > 0
            self.owned -= 1
            while True:
                before = self.state
                self.state += 1
                if before >= 0:
                    return None
                wid = self.queue.pop(0)
                if self.status[wid][0] == "parked":
                    self.status[wid] = ("owned", UNIT)
                    self.owned += 1
                    return None
                # Simple mode keeps cancelled waiters in the queue; a failed
                # delivery re-issues the counter update.
        if verb == "cancel":
            wid = self._live()[arg]
            self.status[wid] = ("cancelled", None)
            if not self.simple:
                self.queue.remove(wid)
                self.state += 1
            return True
        if verb == "try":
            if self.state > 0:
                self.state -= 1
                self.owned += 1
                return True
            return False
        raise ValueError(op)

    def scalar(self) -> int:
        return self.state

    def observe(self) -> tuple:
        return (dict(self.status), self.state)


class LatchModel:
    def __init__(self, count: int):
        self.count = count
        self.opened = count <= 0
        self.queue: list[int] = []
        self.status: dict[int, tuple] = {}
        self.next_wid = 0

    def copy(self) -> "LatchModel":
        twin = LatchModel(self.count)
        twin.count = self.count
        twin.opened = self.opened
        twin.queue = list(self.queue)
        twin.status = dict(self.status)
        twin.next_wid = self.next_wid
        return twin

    def legal_ops(self) -> list[Op]:
        ops: list[Op] = [("await", None), ("count_down", None)]
        ops.extend(("cancel", pos)
                   for pos in _boundary_positions(len(self.queue)))
        return ops

    def apply(self, op: Op) -> Any:
        verb, arg = op
        if verb == "await":
            wid = self.next_wid
            self.next_wid += 1
            if self.opened:
                self.status[wid] = ("owned", UNIT)
                return "owned"
            self.queue.append(wid)
            self.status[wid] = ("parked", None)
            return "parked"
        if verb == "count_down":
            self.count -= 1
            if self.count == 0 and not self.opened:
                self.opened = True
                for wid in self.queue:
                    self.status[wid] = ("owned", UNIT)
                self.queue.clear()
            return None
        if verb == "cancel":
            wid = self.queue.pop(arg)
            self.status[wid] = ("cancelled", None)
            return True
        raise ValueError(op)

    def scalar(self) -> int:
        return max(self.count, 0)

    def observe(self) -> tuple:
        return (dict(self.status), max(self.count, 0))


class BarrierModel:
    def __init__(self, parties: int):
        self.parties = parties
        self.remaining = parties
        self.queue: list[int] = []
        self.status: dict[int, tuple] = {}
        self.next_wid = 0

    def copy(self) -> "BarrierModel":
        twin = BarrierModel(self.parties)
        twin.remaining = self.remaining
        twin.queue = list(self.queue)
        twin.status = dict(self.status)
        twin.next_wid = self.next_wid
        return twin

    def legal_ops(self) -> list[Op]:
        return [("arrive", None)] if self.remaining > 0 else []

    def apply(self, op: Op) -> Any:
        assert op[0] == "arrive"
        wid = self.next_wid
        self.next_wid += 1
        self.remaining -= 1
        if self.remaining > 0:
            self.queue.append(wid)
            self.status[wid] = ("parked", None)
            return "parked"
        for parked in self.queue:
            self.status[parked] = ("owned", UNIT)
        self.queue.clear()
        self.status[wid] = ("owned", UNIT)
        return "owned"

    def scalar(self) -> None:
        return None

    def observe(self) -> tuple:
        return (dict(self.status),)


class PoolModel:
    def __init__(self, fifo: bool):
        self.fifo = fifo
        self.store: list[int] = []
        self.queue: list[int] = []          # parked takers
        self.status: dict[int, tuple] = {}
        self.next_wid = 0
        self.next_element = 1

    def copy(self) -> "PoolModel":
        twin = PoolModel(self.fifo)
        twin.store = list(self.store)
        twin.queue = list(self.queue)
        twin.status = dict(self.status)
        twin.next_wid = self.next_wid
        twin.next_element = self.next_element
        return twin

    def legal_ops(self) -> list[Op]:
        ops: list[Op] = [("put", None), ("take", None)]
        ops.extend(("cancel", pos)
                   for pos in _boundary_positions(len(self.queue)))
        return ops

    def apply(self, op: Op) -> Any:
        verb, arg = op
        if verb == "put":
            element = self.next_element
            self.next_element += 1
            if self.queue:
                wid = self.queue.pop(0)   # parked takers are served FIFO
                self.status[wid] = ("owned", element)
            else:
                self.store.append(element)
            return None
        if verb == "take":
            wid = self.next_wid
            self.next_wid += 1
            if self.store:
                element = self.store.pop(0) if self.fifo else self.store.pop()
                self.status[wid] = ("owned", element)
                return "owned"
            self.queue.append(wid)
            self.status[wid] = ("parked", None)
            return "parked"
        if verb == "cancel":
            wid = self.queue.pop(arg)
            self.status[wid] = ("cancelled", None)
            return True
        raise ValueError(op)

    def scalar(self) -> int:
        return len(self.store) - len(self.queue)

    def observe(self) -> tuple:
        return (dict(self.status), len(self.store) - len(self.queue))


# -- real-side adapters -------------------------------------------------------

def _future_status(handle: Any) -> tuple:
    if isinstance(handle, ImmediateResult):
        return ("owned", handle.get())
    value = handle.get()
    if value is PENDING:
        return ("parked", None)
    if value is FUTURE_CANCELLED:
        return ("cancelled", None)
    return ("owned", value)


class _RealAdapter:
    """Executes model ops against the genuine primitive."""

    def __init__(self):
        self.handles: list[Any] = []
        self.parked: list[int] = []   # wids whose handle may still be parked

    def _register(self, handle: Any) -> None:
        wid = len(self.handles)
        self.handles.append(handle)
        if not isinstance(handle, ImmediateResult):
            self.parked.append(wid)

    def _cancel_nth(self, pos: int) -> bool:
        live = [w for w in self.parked
                if _future_status(self.handles[w])[0] == "parked"]
        wid = live[pos]
        return self.handles[wid].cancel()

    def _statuses(self) -> dict:
        return {wid: _future_status(h) for wid, h in enumerate(self.handles)}


class RealSemaphore(_RealAdapter):
    def __init__(self, permits: int, *, sync: bool = False,
                 simple: bool = False):
        super().__init__()
        self.sem = Semaphore(permits, sync=sync, simple_cancellation=simple,
                             segment_size=2)

    def apply(self, op: Op) -> Any:
        verb, arg = op
        if verb == "acquire":
            handle = self.sem.acquire()
            self._register(handle)
            return "owned" if _future_status(handle)[0] == "owned" else "parked"
        if verb == "release":
            return self.sem.release()
        if verb == "cancel":
            return self._cancel_nth(arg)
        if verb == "try":
            return self.sem.try_acquire()
        raise ValueError(op)

    def scalar(self) -> int:
        return self.sem.available_permits()

    def observe(self) -> tuple:
        return (self._statuses(), self.sem.available_permits())


class RealLatch(_RealAdapter):
    def __init__(self, count: int):
        super().__init__()
        self.latch = CountDownLatch(count, segment_size=2)

    def apply(self, op: Op) -> Any:
        verb, arg = op
        if verb == "await":
            handle = self.latch.await_()
            self._register(handle)
            return "owned" if _future_status(handle)[0] == "owned" else "parked"
        if verb == "count_down":
            return self.latch.count_down()
        if verb == "cancel":
            return self._cancel_nth(arg)
        raise ValueError(op)

    def scalar(self) -> int:
        return self.latch.count()

    def observe(self) -> tuple:
        return (self._statuses(), self.latch.count())


class RealBarrier(_RealAdapter):
    def __init__(self, parties: int):
        super().__init__()
        self.barrier = Barrier(parties, segment_size=2)

    def apply(self, op: Op) -> Any:
        assert op[0] == "arrive"
        handle = self.barrier.arrive()
        self._register(handle)
        return "owned" if _future_status(handle)[0] == "owned" else "parked"

    def scalar(self) -> None:
        return None

    def observe(self) -> tuple:
        return (self._statuses(),)


class RealPool(_RealAdapter):
    def __init__(self, fifo: bool):
        super().__init__()
        self.pool = QueuePool(segment_size=2) if fifo else StackPool()
        self.next_element = 1

    def apply(self, op: Op) -> Any:
        verb, arg = op
        if verb == "put":
            element = self.next_element
            self.next_element += 1
            return self.pool.put(element)
        if verb == "take":
            handle = self.pool.take()
            self._register(handle)
            return "owned" if _future_status(handle)[0] == "owned" else "parked"
        if verb == "cancel":
            return self._cancel_nth(arg)
        raise ValueError(op)

    def scalar(self) -> int:
        return self.pool.size()

    def observe(self) -> tuple:
        return (self._statuses(), self.pool.size())


# -- trace enumeration ---------------------------------------------------------

@dataclass
class TraceVariant:
    """One primitive configuration to check."""
    name: str
    make_model: Callable[[], Any]
    make_real: Callable[[], Any]


@dataclass
class TraceReport:
    variant: str
    depth: int
    traces: int = 0    # distinct non-empty prefixes verified
    replays: int = 0   # maximal traces executed against the real primitive
    steps: int = 0
    mismatch: Optional[dict] = None
    elapsed: float = 0.0

    @property
    def ok(self) -> bool:
        return self.mismatch is None

    def __str__(self) -> str:
        verdict = "ok" if self.ok else f"MISMATCH {self.mismatch}"
        return (f"{self.variant}: depth={self.depth} traces={self.traces} "
                f"replays={self.replays} steps={self.steps} "
                f"{self.elapsed:.1f}s {verdict}")


def standard_variants() -> list[TraceVariant]:
    out = [
        TraceVariant("mutex", lambda: SemaphoreModel(1),
                     lambda: RealSemaphore(1)),
        TraceVariant("mutex-sync", lambda: SemaphoreModel(1, sync=True),
                     lambda: RealSemaphore(1, sync=True)),
        TraceVariant("mutex-simple", lambda: SemaphoreModel(1, simple=True),
                     lambda: RealSemaphore(1, simple=True)),
        TraceVariant("semaphore-2", lambda: SemaphoreModel(2),
                     lambda: RealSemaphore(2)),
        TraceVariant("semaphore-2-sync", lambda: SemaphoreModel(2, sync=True),
                     lambda: RealSemaphore(2, sync=True)),
        TraceVariant("latch-1", lambda: LatchModel(1), lambda: RealLatch(1)),
        TraceVariant("latch-2", lambda: LatchModel(2), lambda: RealLatch(2)),
        TraceVariant("pool-queue", lambda: PoolModel(True),
                     lambda: RealPool(True)),
        TraceVariant("pool-stack", lambda: PoolModel(False),
                     lambda: RealPool(False)),
    ]
    out.extend(TraceVariant(f"barrier-{n}",
                            (lambda n=n: BarrierModel(n)),
                            (lambda n=n: RealBarrier(n)))
               for n in range(1, 13))
    return out


def iter_traces(make_model: Callable[[], Any], depth: int,
                counts: Optional[list] = None) -> Iterator[list[Op]]:
    """Maximal legal op sequences up to ``depth``, driven by the model alone.

    Every shorter trace is a prefix of some yielded one, so replaying the
    yielded traces (comparing after each op) verifies them all; ``counts``
    (a one-element list) receives the number of distinct non-empty prefixes.
    """

    def rec(model: Any, prefix: list[Op]) -> Iterator[list[Op]]:
        ops = model.legal_ops() if len(prefix) < depth else []
        if not ops:
            if prefix:
                yield prefix
            return
        for op in ops:
            if counts is not None:
                counts[0] += 1
            branch = model.copy()
            branch.apply(op)
            yield from rec(branch, prefix + [op])

    yield from rec(make_model(), [])


def replay_trace(variant: TraceVariant, trace: list[Op]) -> Optional[dict]:
    """None if real and model agree after every op, else the divergence.

    Per op we compare the call result and the scalar observable; the full
    status map is compared once at the end.  That is enough: a future's
    status is write-once (parked can only become owned or cancelled, then
    freezes), so a mid-trace wake-up divergence cannot cancel out before the
    final comparison.
    """
    model = variant.make_model()
    real = variant.make_real()
    for i, op in enumerate(trace):
        model_result = model.apply(op)
        real_result = real.apply(op)
        if model_result != real_result:
            return {"trace": trace[:i + 1], "op": op,
                    "model": model_result, "real": real_result,
                    "kind": "result"}
        if model.scalar() != real.scalar():
            return {"trace": trace[:i + 1], "op": op,
                    "model": model.scalar(), "real": real.scalar(),
                    "kind": "counter"}
    m_obs, r_obs = model.observe(), real.observe()
    if m_obs != r_obs:
        return {"trace": list(trace), "op": trace[-1] if trace else None,
                "model": m_obs, "real": r_obs, "kind": "state"}
    return None


def check_traces(variant: TraceVariant, depth: int,
                 fail_fast: bool = True) -> TraceReport:
    """Exhaustively verify every trace up to ``depth`` for one variant."""
    import time
    report = TraceReport(variant.name, depth)
    start = time.perf_counter()
    counts = [0]
    for trace in iter_traces(variant.make_model, depth, counts):
        report.replays += 1
        report.steps += len(trace)
        mismatch = replay_trace(variant, trace)
        if mismatch is not None:
            report.mismatch = mismatch
            if fail_fast:
                break
    report.traces = counts[0]
    report.elapsed = time.perf_counter() - start
    return report
