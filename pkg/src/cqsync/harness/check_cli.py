"""Command-line front end for the interleaving explorer.

Point it at a scenario JSON (see ``scenarios.load_scenario`` for the schema)
or a built-in demo, pick an exploration mode, and it prints the verdict; a
failure dumps the offending schedule so the run can be replayed exactly.

Examples::

    cqsync-check --scenario examples/mutex_cancel.json --preemptions 2
    cqsync-check --builtin naive-mutex --preemptions 2
    cqsync-check --scenario s.json --random 10000 --seed 7
"""

from __future__ import annotations

import argparse
import sys
from typing import Optional

from .explore import explore_interleavings, run_with_schedule
from .fixtures import NaiveMutex, mutex_cancel_unlock_scenario
from .scenarios import load_scenario


def _builtin(name: str):
    from ..primitives import Mutex
    if name == "naive-mutex":
        return mutex_cancel_unlock_scenario(
            NaiveMutex, name="naive-mutex (expected to fail)")
    if name == "mutex":
        return mutex_cancel_unlock_scenario(Mutex, name="mutex")
    raise SystemExit(f"unknown builtin {name!r} (have: mutex, naive-mutex)")


def main(argv: Optional[list] = None) -> int:
    parser = argparse.ArgumentParser(
        prog="cqsync-check",
        description="Deterministically explore thread interleavings of a "
                    "scenario and report the first invariant violation.")
    source = parser.add_mutually_exclusive_group(required=True)
    source.add_argument("--scenario", metavar="FILE",
                        help="scenario description (JSON)")
    source.add_argument("--builtin", metavar="NAME",
                        help="built-in demo scenario (mutex, naive-mutex)")
    mode = parser.add_mutually_exclusive_group()
    mode.add_argument("--exhaustive", action="store_true",
                      help="enumerate every interleaving (no preemption bound)")
    mode.add_argument("--preemptions", type=int, metavar="N",
                      help="enumerate interleavings with at most N preemptions"
                           " (default: 2)")
    mode.add_argument("--random", type=int, metavar="RUNS",
                      help="sample RUNS random schedules instead")
    parser.add_argument("--seed", type=int, default=0,
                        help="seed for --random (default 0)")
    parser.add_argument("--max-schedules", type=int, default=None,
                        help="stop after this many schedules")
    parser.add_argument("--max-steps", type=int, default=20_000,
                        help="per-run step limit before calling it a livelock")
    args = parser.parse_args(argv)

    scenario = (_builtin(args.builtin) if args.builtin
                else load_scenario(args.scenario))

    if args.random is not None:
        result = explore_interleavings(scenario, random_runs=args.random,
                                       seed=args.seed,
                                       max_steps=args.max_steps)
    elif args.exhaustive:
        result = explore_interleavings(scenario, max_preemptions=None,
                                       max_schedules=args.max_schedules,
                                       max_steps=args.max_steps)
    else:
        bound = args.preemptions if args.preemptions is not None else 2
        result = explore_interleavings(scenario, max_preemptions=bound,
                                       max_schedules=args.max_schedules,
                                       max_steps=args.max_steps)

    print(f"scenario: {scenario.name}")
    print(result)
    if result.ok:
        return 0
    ce = result.counterexample
    print(f"\ncounterexample ({ce.kind}):")
    print(ce.message.rstrip())
    print(f"schedule: {ce.schedule}")
    replay = run_with_schedule(scenario, ce.schedule)
    print("replay reproduces:", "yes" if replay is not None else "NO")
    return 1


if __name__ == "__main__":
    sys.exit(main())
