"""Segment list: index claiming, cancellation accounting, and unlinking."""

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cqsync.segments import DEFAULT_SEGMENT_SIZE, SegmentList


def producer(lst):
    return lst.iterators[0]


def consumer(lst):
    return lst.iterators[1]


def test_step_claims_increasing_indexes_and_appends():
    lst = SegmentList(segment_size=2)
    seen = []
    for _ in range(5):
        found, segment, index = lst.step(producer(lst))
        assert found
        seen.append((index, segment.id))
    assert seen == [(0, 0), (1, 0), (2, 1), (3, 1), (4, 2)]


def test_find_segment_appends_to_target():
    lst = SegmentList(segment_size=4)
    first = producer(lst).segment.load()
    segment = lst.find_segment(first, 3)
    assert segment.id == 3
    # The chain in between exists and is linked in both directions.
    assert segment.prev.load().id == 2
    assert first.next.load().id == 1


def test_default_segment_size():
    assert SegmentList().segment_size == DEFAULT_SEGMENT_SIZE


@pytest.mark.parametrize("size", [0, -1, 1 << 16])
def test_segment_size_validation(size):
    with pytest.raises(ValueError):
        SegmentList(segment_size=size)


def test_fully_cancelled_segment_is_unlinked():
    lst = SegmentList(segment_size=1)
    claimed = [lst.step(producer(lst)) for _ in range(3)]
    segments = [segment for _, segment, _ in claimed]
    assert [s.id for s in segments] == [0, 1, 2]
    # Producer has moved past segment 1 and nothing pins it.
    assert segments[1].pointer_count() == 0
    segments[1].on_cancelled_cell()
    assert segments[1].is_removed()
    assert segments[0].next.load().id == 2
    assert segments[2].prev.load().id == 0


def test_step_skips_removed_range():
    lst = SegmentList(segment_size=1)
    for _ in range(3):
        lst.step(producer(lst))
    # Re-walk to fetch segment 1 and cancel its only cell.
    first = consumer(lst).segment.load()
    middle = first.next.load()
    assert middle.id == 1
    middle.on_cancelled_cell()

    found, segment, index = lst.step(consumer(lst))
    assert (found, segment.id, index) == (True, 0, 0)
    found, segment, index = lst.step(consumer(lst))
    # Index 1 lives in the removed segment: the step reports the skip and
    # hands back the first alive segment past it.
    assert (found, segment.id, index) == (False, 2, 1)


def test_pin_fails_on_removed_segment():
    lst = SegmentList(segment_size=1)
    for _ in range(3):
        lst.step(producer(lst))
    middle = consumer(lst).segment.load().next.load()
    middle.on_cancelled_cell()
    assert not middle.try_inc_pointers()


def test_tail_is_never_unlinked():
    lst = SegmentList(segment_size=1)
    found, tail, _ = lst.step(producer(lst))
    assert found
    lst.step(consumer(lst))
    tail.on_cancelled_cell()
    # Fully cancelled, but it is the tail and both iterators pin it.
    assert tail in lst.reachable_segments()
    found, fresh, _ = lst.step(producer(lst))
    assert fresh.id == 1
    # A successor exists now, but the consumer pin still holds it.
    assert tail in lst.reachable_segments()
    lst.step(consumer(lst))
    assert tail not in lst.reachable_segments()


def test_cancelled_counter_tracks_calls():
    lst = SegmentList(segment_size=4)
    _, segment, _ = lst.step(producer(lst))
    assert segment.cancelled_count() == 0
    segment.on_cancelled_cell()
    segment.on_cancelled_cell()
    assert segment.cancelled_count() == 2
    assert not segment.is_removed()


@settings(max_examples=60, deadline=None)
@given(
    size=st.integers(min_value=1, max_value=4),
    claims=st.integers(min_value=1, max_value=40),
    data=st.data(),
)
def test_random_cancellation_patterns_keep_live_segments(size, claims, data):
    """Cancel any subset of claimed cells; live cells keep their segments."""
    lst = SegmentList(segment_size=size)
    by_segment = {}
    for _ in range(claims):
        found, segment, index = lst.step(producer(lst))
        assert found
        by_segment.setdefault(segment.id, segment)
    cancelled = data.draw(
        st.sets(st.integers(min_value=0, max_value=claims - 1)),
        label="cancelled indexes",
    )
    per_segment_live = {seg_id: 0 for seg_id in by_segment}
    for index in range(claims):
        if index in cancelled:
            by_segment[index // size].on_cancelled_cell()
        else:
            per_segment_live[index // size] += 1

    reachable = lst.reachable_segments()
    ids = [segment.id for segment in reachable]
    assert ids == sorted(set(ids)), "reachable ids must be strictly increasing"
    tail_id = max(by_segment)
    for segment in reachable:
        assert segment.cancelled_count() <= size
    for seg_id, segment in by_segment.items():
        live = per_segment_live[seg_id] + (size - 1 - (claims - 1) % size
                                           if seg_id == tail_id else 0)
        pinned = segment.pointer_count() > 0
        if per_segment_live[seg_id] > 0:
            assert seg_id in ids, f"segment {seg_id} holds live cells"
        if live == 0 and not pinned and segment.next.load() is not None:
            assert segment.is_removed()
            assert seg_id not in ids, f"segment {seg_id} should be unlinked"
