"""``cqsync-bench``: run one benchmark sweep and emit CSV rows.

The output schema is fixed at ``primitive,threads,param,mean_ns,std_ns,ops``
(one row per thread count); plotting scripts key on that exact header.
"""

from __future__ import annotations

import argparse
import sys
from typing import List, Optional

from .workloads import PRIMITIVES, BenchConfig, run_config

CSV_HEADER = "primitive,threads,param,mean_ns,std_ns,ops"


def _parse_threads(text: str) -> List[int]:
    try:
        counts = [int(part) for part in text.split(",") if part.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(
            "expected comma-separated thread counts, got %r" % (text,)
        )
    if not counts or any(count < 1 for count in counts):
        raise argparse.ArgumentTypeError("thread counts must be >= 1")
    return counts


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="cqsync-bench",
        description="Benchmark a synchronization primitive across thread counts.",
    )
    parser.add_argument("--primitive", choices=PRIMITIVES, required=True)
    parser.add_argument(
        "--threads",
        type=_parse_threads,
        default=[1, 2, 4, 8],
        help="comma-separated thread counts (default: 1,2,4,8)",
    )
    parser.add_argument(
        "--param",
        type=int,
        default=1,
        help="permits / pre-filled elements; ignored by mutex-style locks",
    )
    parser.add_argument("--work-in", type=int, default=100,
                        help="mean spin iterations inside the operation")
    parser.add_argument("--work-out", type=int, default=100,
                        help="mean spin iterations between operations")
    parser.add_argument("--ops", type=int, default=10_000,
                        help="total operations per measured run")
    parser.add_argument("--seed", type=int, default=1)
    parser.add_argument("--repetitions", type=int, default=5,
                        help="runs per point; the first 20%% are warmup")
    parser.add_argument("--out", default=None, metavar="FILE.csv",
                        help="write CSV here instead of stdout")
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    config = BenchConfig(
        primitive=args.primitive,
        threads=args.threads,
        param=args.param,
        work_in=args.work_in,
        work_out=args.work_out,
        ops=args.ops,
        seed=args.seed,
        repetitions=args.repetitions,
    )
    rows = run_config(config)
    lines = [CSV_HEADER] + [row.as_csv() for row in rows]
    text = "\n".join(lines) + "\n"
    if args.out:
        with open(args.out, "w", encoding="utf-8") as handle:
            handle.write(text)
    else:
        sys.stdout.write(text)
    return 0


if __name__ == "__main__":
    sys.exit(main())
