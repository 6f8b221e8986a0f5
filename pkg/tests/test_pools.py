"""Blocking pools: ordering, parking, cancellation, counter accounting."""

import threading

import pytest

from cqsync.futures import PENDING, ImmediateResult
from cqsync.pools import QueuePool, StackPool


@pytest.fixture(params=[QueuePool, StackPool], ids=["queue", "stack"])
def pool(request):
    return request.param()


def test_queue_pool_is_fifo():
    pool = QueuePool(segment_size=2)
    for element in ("a", "b", "c"):
        pool.put(element)
    assert [pool.take().get() for _ in range(3)] == ["a", "b", "c"]


def test_stack_pool_is_lifo():
    pool = StackPool()
    for element in ("a", "b", "c"):
        pool.put(element)
    assert [pool.take().get() for _ in range(3)] == ["c", "b", "a"]


def test_immediate_take_when_stored(pool):
    pool.put(1)
    taken = pool.take()
    assert isinstance(taken, ImmediateResult)
    assert taken.get() == 1


def test_take_parks_until_put(pool):
    taken = pool.take()
    assert taken.get() is PENDING
    assert pool.size() == -1
    pool.put("late")
    assert taken.get() == "late"
    assert pool.size() == 0


def test_parked_takers_are_served_fifo(pool):
    first = pool.take()
    second = pool.take()
    pool.put("x")
    pool.put("y")
    # Waiter order is FIFO regardless of the store discipline.
    assert first.get() == "x"
    assert second.get() == "y"


def test_size_tracks_stored_elements(pool):
    assert pool.size() == 0
    pool.put(1)
    pool.put(2)
    assert pool.size() == 2
    pool.take()
    assert pool.size() == 1


def test_cancelled_take_rolls_back(pool):
    taken = pool.take()
    assert taken.cancel() is True
    assert pool.size() == 0
    pool.put("kept")
    assert pool.size() == 1
    assert pool.take().get() == "kept"


def test_elements_must_not_be_none(pool):
    with pytest.raises(AssertionError):
        pool.put(None)


def test_threaded_handoff(pool):
    out = []

    def taker():
        out.append(pool.take().blocking_get())

    thread = threading.Thread(target=taker)
    thread.start()
    pool.put(42)
    thread.join(timeout=30)
    assert not thread.is_alive()
    assert out == [42]


def test_queue_pool_reclaims_consumed_slot_segments():
    pool = QueuePool(segment_size=2)
    for burst in range(10):
        for i in range(4):
            pool.put((burst, i))
        for _ in range(4):
            pool.take()
    # The slot array has passed 40 slots but holds nothing; only the
    # iterator-pinned tail segments should remain reachable.
    assert len(pool._slots.reachable_segments()) <= 2
