"""Completion-handle behaviour: immediate results and parked requests."""

import threading

import pytest

from cqsync.futures import CANCELLED, PENDING, UNIT, ImmediateResult, Request
from cqsync.harness import Scenario, explore_interleavings


def test_immediate_result_is_terminal():
    handle = ImmediateResult(4)
    assert handle.get() == 4
    assert handle.blocking_get() == 4
    assert handle.cancel() is False
    with pytest.raises(AssertionError):
        handle.complete(5)


def test_request_completes_once():
    handle = Request()
    assert handle.get() is PENDING
    assert handle.complete(7) is True
    assert handle.get() == 7
    assert handle.blocking_get() == 7
    assert handle.complete(8) is False
    assert handle.get() == 7
    assert handle.cancel() is False


def test_request_cancels_once_and_runs_handler():
    calls = []
    handle = Request(on_cancel=lambda: calls.append(1))
    assert handle.cancel() is True
    assert calls == [1]
    assert handle.cancel() is False
    assert handle.complete(1) is False
    assert handle.get() is CANCELLED
    assert handle.blocking_get() is CANCELLED
    assert calls == [1]


def test_handler_not_run_when_cancel_loses():
    calls = []
    handle = Request(on_cancel=lambda: calls.append(1))
    handle.complete(UNIT)
    assert handle.cancel() is False
    assert calls == []


def test_result_is_write_once():
    handle = Request()
    handle.complete("a")
    seen = {handle.get() for _ in range(50)}
    assert seen == {"a"}


def test_blocking_get_wakes_on_complete():
    handle = Request()
    out = []
    waiter = threading.Thread(target=lambda: out.append(handle.blocking_get()))
    waiter.start()
    handle.complete(8)
    waiter.join(timeout=30)
    assert not waiter.is_alive()
    assert out == [8]


def test_blocking_get_wakes_on_cancel():
    handle = Request()
    out = []
    waiter = threading.Thread(target=lambda: out.append(handle.blocking_get()))
    waiter.start()
    handle.cancel()
    waiter.join(timeout=30)
    assert not waiter.is_alive()
    assert out == [CANCELLED]


def _race_scenario(first, second):
    """Two threads race terminal calls on one request; count the winners."""

    def setup():
        state = {
            "handler_runs": 0,
            "wins": [],
        }
        state["future"] = Request(
            on_cancel=lambda: state.__setitem__(
                "handler_runs", state["handler_runs"] + 1))
        return state

    def runner(op):
        def run(state):
            if op == "complete":
                won = state["future"].complete(99)
            else:
                won = state["future"].cancel()
            state["wins"].append((op, won))
        return run

    def finalize(state):
        winners = [op for op, won in state["wins"] if won]
        assert len(winners) == 1, f"expected one winner, saw {state['wins']}"
        cancelled = winners == ["cancel"]
        assert state["handler_runs"] == (1 if cancelled else 0)
        value = state["future"].get()
        assert value is CANCELLED if cancelled else value == 99

    return Scenario(name=f"race-{first}-{second}", setup=setup,
                    threads=[runner(first), runner(second)],
                    finalize=finalize)


@pytest.mark.parametrize("ops", [("complete", "cancel"), ("cancel", "cancel")])
def test_exactly_one_terminal_call_wins_all_interleavings(ops):
    result = explore_interleavings(_race_scenario(*ops))
    assert result.ok, str(result)
    assert result.exhausted
    assert result.schedules >= 2
