"""Interleaving explorer: exhaustiveness, bounding, replay, verdicts."""

import json

import pytest

from cqsync.atomics import AtomicInt
from cqsync.harness import (
    NaiveMutex,
    Scenario,
    explore_interleavings,
    load_scenario,
    mutex_cancel_unlock_scenario,
    run_with_schedule,
)
from cqsync.harness.check_cli import main as check_main
from cqsync.primitives import Mutex


def _racy_counter_scenario():
    """Classic lost update: load and store as two separate atomic steps."""

    def setup():
        return {"counter": AtomicInt(0)}

    def bump(state):
        value = state["counter"].load()
        state["counter"].store(value + 1)

    def finalize(state):
        total = state["counter"].load_relaxed()
        assert total == 2, f"lost update: counter == {total}"

    return Scenario(name="racy-counter", setup=setup,
                    threads=[bump, bump], finalize=finalize)


def _atomic_counter_scenario():
    def setup():
        return {"counter": AtomicInt(0)}

    def bump(state):
        state["counter"].fetch_and_add(1)

    def finalize(state):
        assert state["counter"].load_relaxed() == 2

    return Scenario(name="atomic-counter", setup=setup,
                    threads=[bump, bump], finalize=finalize)


def test_exhaustive_exploration_finds_the_lost_update():
    result = explore_interleavings(_racy_counter_scenario())
    assert not result.ok
    ce = result.counterexample
    assert ce.kind == "finalize"
    assert "lost update" in ce.message


def test_counterexample_schedule_replays():
    result = explore_interleavings(_racy_counter_scenario())
    replayed = run_with_schedule(_racy_counter_scenario(),
                                 result.counterexample.schedule)
    assert replayed is not None
    assert replayed.kind == "finalize"
    assert "lost update" in replayed.message


def test_passing_schedules_replay_clean():
    assert run_with_schedule(_atomic_counter_scenario(), [0, 0, 1, 1]) is None


def test_atomic_increments_pass_exhaustively():
    result = explore_interleavings(_atomic_counter_scenario())
    assert result.ok, str(result)
    assert result.exhausted
    assert result.schedules >= 2


def test_zero_preemptions_runs_threads_back_to_back():
    result = explore_interleavings(_atomic_counter_scenario(),
                                   max_preemptions=0)
    assert result.ok
    assert result.exhausted
    # The first pick is free (nothing is running yet), so with two threads
    # and no preemptions there are exactly two back-to-back schedules.
    assert result.schedules == 2


def test_preemption_bound_limits_the_walk():
    bounded = explore_interleavings(_racy_counter_scenario(),
                                    max_preemptions=1)
    full = explore_interleavings(_racy_counter_scenario())
    # Both find the bug; the bounded walk needs no more schedules.
    assert not bounded.ok and not full.ok
    assert bounded.schedules <= full.schedules


def test_max_schedules_caps_the_walk():
    result = explore_interleavings(_atomic_counter_scenario(),
                                   max_schedules=1)
    assert result.ok
    assert not result.exhausted
    assert result.schedules == 1


def test_random_mode_is_seed_deterministic():
    first = explore_interleavings(_racy_counter_scenario(),
                                  random_runs=200, seed=7)
    second = explore_interleavings(_racy_counter_scenario(),
                                   random_runs=200, seed=7)
    assert not first.ok and not second.ok
    assert first.counterexample.schedule == second.counterexample.schedule
    assert first.schedules == second.schedules


def _deadlock_scenario():
    def setup():
        return {"a": Mutex(), "b": Mutex()}

    def locker(first, second):
        def run(state):
            state[first].lock().blocking_get()
            state[second].lock().blocking_get()
            state[second].unlock()
            state[first].unlock()
        return run

    return Scenario(name="lock-order-inversion", setup=setup,
                    threads=[locker("a", "b"), locker("b", "a")])


def test_deadlock_is_reported():
    # One preemption suffices: each thread grabs its first lock, then both
    # block on the other's.  (Unbounded DFS would flip late scheduling
    # choices first and wade through a huge passing subtree to get here.)
    result = explore_interleavings(_deadlock_scenario(), max_preemptions=1)
    assert not result.ok
    assert result.counterexample.kind == "deadlock"


def test_livelock_guard_trips_on_runaway_scenarios():
    def setup():
        return {"counter": AtomicInt(0)}

    def spinner(state):
        for _ in range(1000):
            state["counter"].fetch_and_add(1)

    result = explore_interleavings(
        Scenario(name="spinner", setup=setup, threads=[spinner]),
        max_steps=50)
    assert not result.ok
    assert result.counterexample.kind == "livelock"


def test_exceptions_become_counterexamples():
    def setup():
        return {}

    def boom(state):
        raise RuntimeError("kaboom")

    result = explore_interleavings(
        Scenario(name="boom", setup=setup, threads=[boom]))
    assert not result.ok
    ce = result.counterexample
    assert ce.kind == "exception"
    assert "kaboom" in ce.message
    assert ce.thread == 0


def test_naive_cancellation_mutex_is_caught():
    naive = mutex_cancel_unlock_scenario(NaiveMutex, "naive")
    result = explore_interleavings(naive, max_preemptions=1)
    assert not result.ok
    assert "permit owners" in result.counterexample.message
    # The schedule is a genuine witness: replaying it fails the same way.
    replay = run_with_schedule(mutex_cancel_unlock_scenario(NaiveMutex, "naive"),
                               result.counterexample.schedule)
    assert replay is not None


def test_shipped_mutex_survives_the_same_scenario():
    shipped = mutex_cancel_unlock_scenario(Mutex, "shipped")
    result = explore_interleavings(shipped, max_preemptions=2)
    assert result.ok, str(result)
    assert result.exhausted


class TestCheckCli:
    def test_builtin_mutex_passes(self, capsys):
        assert check_main(["--builtin", "mutex", "--preemptions", "1"]) == 0
        out = capsys.readouterr().out
        assert "ok" in out

    def test_builtin_naive_mutex_fails_with_replay(self, capsys):
        assert check_main(["--builtin", "naive-mutex",
                           "--preemptions", "1"]) == 1
        out = capsys.readouterr().out
        assert "schedule" in out
        assert "replay" in out

    def test_scenario_file_roundtrip(self, tmp_path, capsys):
        doc = {
            "name": "two-users",
            "primitive": "semaphore",
            "params": {"permits": 1, "segment_size": 2},
            "threads": [["use"], ["cancel_or_use"]],
        }
        path = tmp_path / "scenario.json"
        path.write_text(json.dumps(doc), encoding="utf-8")
        loaded = load_scenario(str(path))
        assert loaded.name == "two-users"
        assert check_main(["--scenario", str(path), "--preemptions", "2"]) == 0

    def test_unknown_builtin_is_rejected(self):
        with pytest.raises(SystemExit):
            check_main(["--builtin", "nonsense"])
