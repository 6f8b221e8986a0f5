"""Checkable scenario programs over the shipped primitives.

A scenario assigns each thread a small program of operations (acquire,
release, cancel, put, take, ...) against one shared primitive, instrumented
with the invariants the exploration suite checks:

* occupancy: at most K permit holders at any scheduling point;
* exact accounting: the permit counter matches holders + live waiters at
  quiescence (smart-cancellation modes);
* delivery balance: the waiter queue's success/completion/refusal counters
  reconcile at quiescence;
* conservation: pool elements are neither lost nor duplicated; latch/barrier
  futures complete exactly when their counters say so.

Programs are written so every interleaving terminates (waits only on
deliveries some thread is guaranteed to produce), which keeps exploration
sound: a deadlock report is always a real bug.  ``generate_two_thread_family``
enumerates the program pairs used by the acceptance suite;
:func:`load_scenario` builds a scenario from the JSON the check CLI takes.
"""

from __future__ import annotations

import itertools
import json
from typing import Callable, Optional, Sequence

from ..atomics import AtomicInt
from ..core import CqsStats
from ..futures import ImmediateResult, PENDING, UNIT
from ..pools import QueuePool, StackPool
from ..primitives import Barrier, CountDownLatch, Semaphore
from .explore import Scenario


class _Occupancy:
    """Counts threads inside the guarded section; entering asserts the cap."""

    def __init__(self, limit: int):
        self.limit = limit
        self._count = AtomicInt(0)

    def enter(self) -> None:
        inside = self._count.fetch_and_add(1) + 1
        assert inside <= self.limit, (
            f"{inside} holders inside a {self.limit}-permit section")

    def exit(self) -> None:
        self._count.fetch_and_add(-1)

    def current(self) -> int:
        return self._count.load_relaxed()


def _check_balance(stats: CqsStats) -> None:
    assert stats.balance() == 0, f"delivery balance broken: {stats.snapshot()}"


# -- semaphore / mutex ------------------------------------------------------

class _SemCtx:
    def __init__(self, permits: int, sync: bool, simple: bool,
                 segment_size: int, threads: int):
        self.stats = CqsStats()
        self.sem = Semaphore(permits, sync=sync, simple_cancellation=simple,
                             segment_size=segment_size, max_spin_cycles=3,
                             stats=self.stats)
        self.permits = permits
        self.simple = simple
        self.occupancy = _Occupancy(permits)
        self.pending: list[list] = [[] for _ in range(threads)]
        self.held = [0 for _ in range(threads)]
        self.completed = AtomicInt(0)   # acquires that ended up owning a permit
        self.cancelled = AtomicInt(0)
        self.tries_ok = AtomicInt(0)


def _sem_thread(ops: Sequence[str], tid: int) -> Callable[[_SemCtx], None]:
    def body(ctx: _SemCtx) -> None:
        sem, occ = ctx.sem, ctx.occupancy
        pending, held = ctx.pending[tid], 0

        def own() -> None:
            nonlocal held
            ctx.completed.fetch_and_add(1)
            occ.enter()
            held += 1

        def drop() -> None:
            nonlocal held
            assert held > 0, "release without a held permit"
            occ.exit()
            held -= 1
            sem.release()

        for op in ops:
            if op == "use":
                future = sem.acquire()
                result = future.blocking_get()
                assert result is UNIT
                own()
                drop()
            elif op == "cancel_or_use":
                future = sem.acquire()
                if isinstance(future, ImmediateResult):
                    own()
                    drop()
                elif future.cancel():
                    ctx.cancelled.fetch_and_add(1)
                else:
                    assert future.get() is UNIT
                    own()
                    drop()
            elif op == "acquire":
                future = sem.acquire()
                if isinstance(future, ImmediateResult):
                    own()
                else:
                    pending.append(future)
            elif op == "await":
                if pending:  # no-op when every acquire completed immediately
                    future = pending.pop(0)
                    result = future.blocking_get()
                    assert result is UNIT
                    own()
            elif op == "cancel":
                if pending:
                    future = pending.pop(0)
                    if future.cancel():
                        ctx.cancelled.fetch_and_add(1)
                    else:
                        assert future.get() is UNIT
                        own()
            elif op == "release":
                drop()
            elif op == "drop":
                if held:  # release only if some earlier op won a permit
                    drop()
            elif op == "try":
                if sem.try_acquire():
                    ctx.tries_ok.fetch_and_add(1)
                    own()
                    drop()
            else:
                raise ValueError(f"unknown semaphore op {op!r}")
        ctx.held[tid] = held
    return body


def semaphore_scenario(programs: Sequence[Sequence[str]], *, permits: int = 1,
                       sync: bool = False, simple: bool = False,
                       segment_size: int = 2,
                       name: Optional[str] = None) -> Scenario:
    threads = len(programs)

    def setup() -> _SemCtx:
        return _SemCtx(permits, sync, simple, segment_size, threads)

    def finalize(ctx: _SemCtx) -> None:
        held = sum(ctx.held)  # permits threads still hold at the end
        assert ctx.occupancy.current() == held, "a permit holder never left"
        _check_balance(ctx.stats)
        owned = 0     # completed but never awaited: still owns a permit
        waiting = 0   # registered, never completed nor cancelled
        for plist in ctx.pending:
            for future in plist:
                value = future.get()
                if value is UNIT:
                    owned += 1
                elif value is PENDING:
                    waiting += 1
        if not ctx.simple:
            # Exact permit accounting only holds with smart cancellation;
            # simple mode leaves cancelled claims in the counter until a
            # release sweeps past them.
            expected = ctx.permits - held - owned - waiting
            assert ctx.sem.available_permits() == expected, (
                f"counter {ctx.sem.available_permits()} != {expected} "
                f"({ctx.permits} permits - {held} held - {owned} owned - "
                f"{waiting} waiting)")

    label = name or f"semaphore(K={permits},sync={sync},simple={simple})"
    return Scenario(label, setup,
                    [_sem_thread(p, i) for i, p in enumerate(programs)],
                    finalize)


def mutex_scenario(programs: Sequence[Sequence[str]], *, sync: bool = False,
                   simple: bool = False, segment_size: int = 2,
                   name: Optional[str] = None) -> Scenario:
    return semaphore_scenario(programs, permits=1, sync=sync, simple=simple,
                              segment_size=segment_size,
                              name=name or f"mutex(sync={sync},simple={simple})")


# -- count-down latch --------------------------------------------------------

class _LatchCtx:
    def __init__(self, count: int, segment_size: int, threads: int):
        self.stats = CqsStats()
        self.latch = CountDownLatch(count, segment_size=segment_size,
                                    stats=self.stats)
        self.count = count
        self.futures: list[list] = [[] for _ in range(threads)]
        self.cancelled: list[list] = [[] for _ in range(threads)]
        self.downs = AtomicInt(0)


def _latch_thread(ops: Sequence[str], tid: int) -> Callable[[_LatchCtx], None]:
    def body(ctx: _LatchCtx) -> None:
        for op in ops:
            if op == "await":
                ctx.futures[tid].append(ctx.latch.await_())
            elif op == "await_cancel":
                future = ctx.latch.await_()
                if isinstance(future, ImmediateResult) or not future.cancel():
                    ctx.futures[tid].append(future)
                else:
                    ctx.cancelled[tid].append(future)
            elif op == "count_down":
                ctx.latch.count_down()
                ctx.downs.fetch_and_add(1)
            else:
                raise ValueError(f"unknown latch op {op!r}")
    return body


def latch_scenario(programs: Sequence[Sequence[str]], *, count: int,
                   segment_size: int = 2,
                   name: Optional[str] = None) -> Scenario:
    threads = len(programs)

    def setup() -> _LatchCtx:
        return _LatchCtx(count, segment_size, threads)

    def finalize(ctx: _LatchCtx) -> None:
        _check_balance(ctx.stats)
        opened = ctx.downs.load_relaxed() >= ctx.count
        for flist in ctx.futures:
            for future in flist:
                value = future.get()
                if opened:
                    assert value is UNIT, (
                        "gate opened but a registered waiter never woke")
                else:
                    assert value is PENDING, (
                        "waiter completed before the count reached zero")

    return Scenario(name or f"latch(count={count})", setup,
                    [_latch_thread(p, i) for i, p in enumerate(programs)],
                    finalize)


# -- barrier -----------------------------------------------------------------

class _BarrierCtx:
    def __init__(self, parties: int, segment_size: int, threads: int):
        self.barrier = Barrier(parties, segment_size=segment_size)
        self.parties = parties
        self.arrived = AtomicInt(0)
        self.futures: list[list] = [[] for _ in range(threads)]


def _barrier_thread(ops: Sequence[str], tid: int) -> Callable[[_BarrierCtx], None]:
    def body(ctx: _BarrierCtx) -> None:
        for op in ops:
            if op == "arrive":
                ctx.arrived.fetch_and_add(1)
                ctx.futures[tid].append(ctx.barrier.arrive())
            elif op == "wait":
                future = ctx.futures[tid].pop(0)
                result = future.blocking_get()
                assert result is UNIT
                assert ctx.arrived.load_relaxed() == ctx.parties, (
                    "barrier opened before every party arrived")
            else:
                raise ValueError(f"unknown barrier op {op!r}")
    return body


def barrier_scenario(programs: Sequence[Sequence[str]], *,
                     segment_size: int = 2,
                     name: Optional[str] = None) -> Scenario:
    threads = len(programs)
    parties = sum(op == "arrive" for p in programs for op in p)

    def setup() -> _BarrierCtx:
        return _BarrierCtx(parties, segment_size, threads)

    def finalize(ctx: _BarrierCtx) -> None:
        assert ctx.arrived.load_relaxed() == ctx.parties
        for flist in ctx.futures:
            for future in flist:
                assert future.get() is UNIT
                assert future.cancel() is False

    return Scenario(name or f"barrier(parties={parties})", setup,
                    [_barrier_thread(p, i) for i, p in enumerate(programs)],
                    finalize)


# -- blocking pools ----------------------------------------------------------

class _PoolCtx:
    def __init__(self, kind: str, segment_size: int, threads: int):
        self.stats = CqsStats()
        if kind == "queue":
            self.pool = QueuePool(segment_size=segment_size, stats=self.stats)
        elif kind == "stack":
            self.pool = StackPool(stats=self.stats)
        else:
            raise ValueError(f"unknown pool kind {kind!r}")
        self.next_element = AtomicInt(1)
        self.put_count = AtomicInt(0)
        self.received: list[list] = [[] for _ in range(threads)]
        self.pending: list[list] = [[] for _ in range(threads)]
        self.cancelled_takes = AtomicInt(0)


def _pool_thread(ops: Sequence[str], tid: int) -> Callable[[_PoolCtx], None]:
    def body(ctx: _PoolCtx) -> None:
        pool = ctx.pool
        for op in ops:
            if op == "put":
                element = ctx.next_element.fetch_and_add(1)
                ctx.put_count.fetch_and_add(1)
                pool.put(element)
            elif op == "take":
                future = pool.take()
                if isinstance(future, ImmediateResult):
                    ctx.received[tid].append(future.get())
                else:
                    ctx.pending[tid].append(future)
            elif op == "wait":
                if ctx.pending[tid]:  # no-op when the take was immediate
                    future = ctx.pending[tid].pop(0)
                    ctx.received[tid].append(future.blocking_get())
            elif op == "take_cancel":
                future = pool.take()
                if isinstance(future, ImmediateResult):
                    ctx.received[tid].append(future.get())
                elif future.cancel():
                    ctx.cancelled_takes.fetch_and_add(1)
                else:
                    ctx.received[tid].append(future.get())
            else:
                raise ValueError(f"unknown pool op {op!r}")
    return body


def pool_scenario(kind: str, programs: Sequence[Sequence[str]], *,
                  segment_size: int = 2,
                  name: Optional[str] = None) -> Scenario:
    threads = len(programs)

    def setup() -> _PoolCtx:
        return _PoolCtx(kind, segment_size, threads)

    def finalize(ctx: _PoolCtx) -> None:
        _check_balance(ctx.stats)
        delivered: list[int] = []
        for rlist in ctx.received:
            delivered.extend(rlist)
        still_pending = 0
        for plist in ctx.pending:
            for future in plist:
                value = future.get()
                if value is PENDING:
                    still_pending += 1
                else:
                    delivered.append(value)
        assert len(set(delivered)) == len(delivered), (
            f"an element was delivered twice: {sorted(delivered)}")
        size = ctx.pool.size()
        stored = ctx.put_count.load_relaxed() - len(delivered)
        assert size == stored - still_pending, (
            f"size {size} != {stored} stored - {still_pending} parked takers")
        # Drain whatever the store still holds; together with the deliveries
        # that must account for every put exactly once.
        for _ in range(max(size, 0)):
            future = ctx.pool.take()
            assert isinstance(future, ImmediateResult)
            delivered.append(future.get())
        assert len(set(delivered)) == len(delivered)
        assert len(delivered) == ctx.put_count.load_relaxed(), (
            f"{ctx.put_count.load_relaxed()} puts but "
            f"{len(delivered)} elements accounted for")

    return Scenario(name or f"pool({kind})", setup,
                    [_pool_thread(p, i) for i, p in enumerate(programs)],
                    finalize)


# -- generated two-thread families -------------------------------------------

def generate_two_thread_family(primitive: str, *, max_ops: int = 6) -> list[Scenario]:
    """Program pairs with at most ``max_ops`` primitive operations per thread.

    Programs are built from compound steps that stay feasible under every
    interleaving (an acquire is always awaited, cancelled, or released), so
    exploration never deadlocks by construction; at least one cancelling
    program appears for every cancellable primitive.
    """
    if primitive in ("mutex", "semaphore"):
        # "use" costs 3 operations (acquire, await, release);
        # "cancel_or_use" costs up to 3.
        letters = ["use", "cancel_or_use"]
        per_thread = max_ops // 3
        programs = _macro_programs(letters, per_thread)
        scenarios = []
        sync_opts = (False, True)
        permits = (1,) if primitive == "mutex" else (1, 2)
        for sync in sync_opts:
            for k in permits:
                for left, right in _program_pairs(programs):
                    scenarios.append(semaphore_scenario(
                        [left, right], permits=k, sync=sync,
                        name=f"{primitive}(K={k},sync={sync}) "
                             f"{'/'.join(left)} vs {'/'.join(right)}"))
        return scenarios
    if primitive == "latch":
        letters = ["await", "await_cancel", "count_down"]
        programs = _macro_programs(letters, 2)
        scenarios = []
        for count in (1, 2):
            for left, right in _program_pairs(programs):
                scenarios.append(latch_scenario(
                    [left, right], count=count,
                    name=f"latch(count={count}) "
                         f"{'/'.join(left)} vs {'/'.join(right)}"))
        return scenarios
    if primitive == "barrier":
        scenarios = []
        shapes = [
            (["arrive", "wait"], ["arrive", "wait"]),
            (["arrive"], ["arrive", "wait"]),
            (["arrive", "arrive", "wait", "wait"], ["arrive", "wait"]),
            # A wait may only precede an arrive of the same thread if the
            # other threads can still fill the group on their own.
            (["arrive", "arrive", "wait", "wait"],
             ["arrive", "arrive", "wait", "wait"]),
        ]
        for left, right in shapes:
            scenarios.append(barrier_scenario(
                [left, right],
                name=f"barrier {'/'.join(left)} vs {'/'.join(right)}"))
        return scenarios
    if primitive in ("pool-queue", "pool-stack"):
        kind = primitive.split("-", 1)[1]
        # Every "wait" below is fed by a put some other thread reaches
        # without blocking first, so all interleavings terminate.
        shapes = [
            (["put"], ["take", "wait", "put", "take", "wait"]),
            (["put", "put"], ["take", "wait", "take", "wait"]),
            (["take", "wait"], ["put"]),
            (["take_cancel", "put"], ["take", "wait", "put"]),
            (["take_cancel", "take_cancel"], ["put", "put"]),
            (["put", "take", "put", "take"], ["take_cancel", "put"]),
        ]
        return [pool_scenario(kind, [l, r],
                              name=f"pool-{kind} {'/'.join(l)} vs {'/'.join(r)}")
                for l, r in shapes]
    raise ValueError(f"unknown primitive {primitive!r}")


def _macro_programs(letters: Sequence[str], max_len: int) -> list[tuple[str, ...]]:
    out: list[tuple[str, ...]] = []
    for length in range(1, max_len + 1):
        out.extend(itertools.product(letters, repeat=length))
    return out


def _program_pairs(programs: Sequence[tuple[str, ...]]):
    for i, left in enumerate(programs):
        for right in programs[i:]:
            yield list(left), list(right)


# -- JSON scenarios for the check CLI ----------------------------------------

_BUILDERS = {
    "mutex": lambda params, programs, name: mutex_scenario(
        programs, sync=params.get("sync", False),
        simple=params.get("simple", False),
        segment_size=params.get("segment_size", 2), name=name),
    "semaphore": lambda params, programs, name: semaphore_scenario(
        programs, permits=params.get("permits", 1),
        sync=params.get("sync", False), simple=params.get("simple", False),
        segment_size=params.get("segment_size", 2), name=name),
    "latch": lambda params, programs, name: latch_scenario(
        programs, count=params.get("count", 1),
        segment_size=params.get("segment_size", 2), name=name),
    "barrier": lambda params, programs, name: barrier_scenario(
        programs, segment_size=params.get("segment_size", 2), name=name),
    "pool-queue": lambda params, programs, name: pool_scenario(
        "queue", programs, segment_size=params.get("segment_size", 2),
        name=name),
    "pool-stack": lambda params, programs, name: pool_scenario(
        "stack", programs, name=name),
}


def load_scenario(path: str) -> Scenario:
    """Build a scenario from a JSON file.

    Schema::

        {"name": "...", "primitive": "mutex|semaphore|latch|barrier|"
                        "pool-queue|pool-stack",
         "params": {"permits": 2, "sync": true, ...},
         "threads": [["acquire", "cancel"], ["use"], ...]}
    """
    with open(path, encoding="utf-8") as fh:
        doc = json.load(fh)
    primitive = doc["primitive"]
    if primitive not in _BUILDERS:
        raise ValueError(f"unknown primitive {primitive!r} in {path}")
    name = doc.get("name", f"{primitive} scenario")
    return _BUILDERS[primitive](doc.get("params", {}), doc["threads"], name)
