"""Scenario builders: generated families and JSON loading."""

import json

import pytest

from cqsync.harness import explore_interleavings, generate_two_thread_family
from cqsync.harness.scenarios import load_scenario

EXPECTED_FAMILY_SIZES = {
    "mutex": 42,
    "semaphore": 84,
    "latch": 156,
    "barrier": 4,
    "pool-queue": 6,
    "pool-stack": 6,
}


@pytest.mark.parametrize("primitive", sorted(EXPECTED_FAMILY_SIZES))
def test_family_shape(primitive):
    family = generate_two_thread_family(primitive)
    assert len(family) == EXPECTED_FAMILY_SIZES[primitive]
    names = [scenario.name for scenario in family]
    assert len(names) == len(set(names)), "scenario names must be unique"
    assert all(len(scenario.threads) == 2 for scenario in family)


def test_unknown_family_is_rejected():
    with pytest.raises(ValueError):
        generate_two_thread_family("spinlock")


@pytest.mark.parametrize("primitive", sorted(EXPECTED_FAMILY_SIZES))
def test_one_family_member_explores_clean(primitive):
    scenario = generate_two_thread_family(primitive)[0]
    result = explore_interleavings(scenario, max_preemptions=1)
    assert result.ok, f"{scenario.name}: {result}"


def _write(tmp_path, doc):
    path = tmp_path / "scenario.json"
    path.write_text(json.dumps(doc), encoding="utf-8")
    return str(path)


def test_load_scenario_builds_all_primitives(tmp_path):
    docs = [
        {"primitive": "mutex", "threads": [["use"], ["use"]]},
        {"primitive": "semaphore", "params": {"permits": 2},
         "threads": [["use"], ["cancel_or_use"]]},
        {"primitive": "latch", "params": {"count": 1},
         "threads": [["await"], ["count_down"]]},
        {"primitive": "barrier", "params": {"parties": 2},
         "threads": [["arrive"], ["arrive"]]},
        {"primitive": "pool-queue", "threads": [["put"], ["take"]]},
        {"primitive": "pool-stack", "threads": [["put"], ["take", "wait"]]},
    ]
    for doc in docs:
        scenario = load_scenario(_write(tmp_path, doc))
        result = explore_interleavings(scenario, max_preemptions=1)
        assert result.ok, f"{doc['primitive']}: {result}"


def test_load_scenario_rejects_unknown_primitive(tmp_path):
    with pytest.raises(ValueError):
        load_scenario(_write(tmp_path, {"primitive": "gate",
                                        "threads": [["x"]]}))


def test_shipped_sample_scenarios_pass(tmp_path):
    for sample in ("scenarios/mutex_cancel_race.json",
                   "scenarios/semaphore_two_permits.json",
                   "scenarios/queue_pool_handoff.json"):
        scenario = load_scenario(sample)
        result = explore_interleavings(scenario, max_preemptions=1)
        assert result.ok, f"{sample}: {result}"
