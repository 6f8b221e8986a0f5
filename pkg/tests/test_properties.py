"""Property-based checks: random walks where the exhaustive sweeps stop.

The exhaustive oracle equivalence covers every sequential trace up to a
fixed depth; these properties push single variants much deeper along
randomly chosen branches, and restate the core conservation laws over
arbitrary generated call sequences.
"""

from hypothesis import given, settings
from hypothesis import strategies as st

from cqsync.core import Cqs, CqsStats
from cqsync.futures import UNIT
from cqsync.harness.oracle import (
    BarrierModel,
    LatchModel,
    PoolModel,
    RealBarrier,
    RealLatch,
    RealPool,
    RealSemaphore,
    SemaphoreModel,
    TraceVariant,
    replay_trace,
)
from cqsync.pools import QueuePool, StackPool
from cqsync.primitives import Semaphore


def _random_trace(data, make_model, max_len):
    """Draw one legal trace by walking the model."""
    model = make_model()
    trace = []
    for _ in range(max_len):
        ops = model.legal_ops()
        if not ops:
            break
        op = data.draw(st.sampled_from(ops), label="op")
        model.apply(op)
        trace.append(op)
    return trace


@settings(max_examples=120, deadline=None)
@given(data=st.data(),
       permits=st.integers(min_value=1, max_value=3),
       sync=st.booleans(),
       simple=st.booleans())
def test_semaphore_deep_random_traces_match_oracle(data, permits, sync,
                                                   simple):
    variant = TraceVariant(
        "semaphore-prop",
        lambda: SemaphoreModel(permits, sync=sync, simple=simple),
        lambda: RealSemaphore(permits, sync=sync, simple=simple))
    trace = _random_trace(data, variant.make_model, 24)
    assert replay_trace(variant, trace) is None


@settings(max_examples=80, deadline=None)
@given(data=st.data(),
       count=st.integers(min_value=1, max_value=3))
def test_latch_deep_random_traces_match_oracle(data, count):
    variant = TraceVariant("latch-prop",
                           lambda: LatchModel(count),
                           lambda: RealLatch(count))
    trace = _random_trace(data, variant.make_model, 24)
    assert replay_trace(variant, trace) is None


@settings(max_examples=80, deadline=None)
@given(data=st.data(), fifo=st.booleans())
def test_pool_deep_random_traces_match_oracle(data, fifo):
    variant = TraceVariant("pool-prop",
                           lambda: PoolModel(fifo),
                           lambda: RealPool(fifo))
    trace = _random_trace(data, variant.make_model, 24)
    assert replay_trace(variant, trace) is None


@settings(max_examples=60, deadline=None)
@given(data=st.data(), parties=st.integers(min_value=1, max_value=6))
def test_barrier_deep_random_traces_match_oracle(data, parties):
    variant = TraceVariant("barrier-prop",
                           lambda: BarrierModel(parties),
                           lambda: RealBarrier(parties))
    trace = _random_trace(data, variant.make_model, 24)
    assert replay_trace(variant, trace) is None


@settings(max_examples=100, deadline=None)
@given(picks=st.lists(st.booleans(), min_size=1, max_size=40))
def test_fifo_completion_order_for_any_interleaving(picks):
    """However suspends and resumes interleave, values arrive in order."""
    cqs = Cqs(segment_size=2)
    futures = []
    resumed = 0
    for wants_suspend in picks:
        if wants_suspend or resumed == len(futures):
            futures.append(cqs.suspend())
        else:
            assert cqs.resume(resumed) is True
            resumed += 1
    while resumed < len(futures):
        assert cqs.resume(resumed) is True
        resumed += 1
    assert [future.get() for future in futures] == list(range(len(futures)))


@settings(max_examples=100, deadline=None)
@given(data=st.data(), fifo=st.booleans())
def test_pool_conserves_elements(data, fifo):
    """No element is ever lost or duplicated, whatever the call sequence."""
    pool = QueuePool(segment_size=2) if fifo else StackPool()
    next_element = 0
    stored = 0
    pending = []
    delivered = []
    for _ in range(data.draw(st.integers(min_value=1, max_value=30),
                             label="steps")):
        choices = ["put"]
        if stored > 0:
            choices.append("take")
        if pending:
            choices.append("cancel")
        verb = data.draw(st.sampled_from(choices), label="verb")
        if verb == "put":
            pool.put(next_element)
            next_element += 1
            if pending:
                request = pending.pop(0)
                delivered.append(request.get())
            else:
                stored += 1
        elif verb == "take":
            delivered.append(pool.take().get())
            stored -= 1
        else:
            assert pending.pop().cancel() is True
    while stored > 0:
        delivered.append(pool.take().get())
        stored -= 1
    assert len(delivered) == len(set(delivered)), "duplicate delivery"
    assert set(delivered) <= set(range(next_element))
    # Every element was delivered somewhere; still-parked takers hold none.
    assert len(delivered) == next_element
    assert pool.size() == -len(pending)


@settings(max_examples=100, deadline=None)
@given(data=st.data(), permits=st.integers(min_value=1, max_value=4))
def test_semaphore_counter_is_exact_accounting(data, permits):
    stats = CqsStats()
    sem = Semaphore(permits, stats=stats)
    held = 0
    parked = []
    for _ in range(data.draw(st.integers(min_value=1, max_value=40),
                             label="steps")):
        choices = ["acquire"]
        if held:
            choices.append("release")
        if parked:
            choices.append("cancel")
        verb = data.draw(st.sampled_from(choices), label="verb")
        if verb == "acquire":
            future = sem.acquire()
            if future.get() is UNIT:
                held += 1
            else:
                parked.append(future)
        elif verb == "release":
            sem.release()
            held -= 1
            if parked:
                parked.pop(0)
                held += 1
        else:
            assert parked.pop().cancel() is True
        assert sem.available_permits() == permits - held - len(parked)
    # Drive to quiescence: the conservation identities are exact only once
    # every parked acquire has been completed or cancelled.
    while parked:
        assert parked.pop().cancel() is True
    while held:
        sem.release()
        held -= 1
    assert sem.available_permits() == permits
    assert stats.balance() == 0
    assert stats.suspend_conservation() == 0
