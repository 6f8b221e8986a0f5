"""Benchmark CLI: contended workloads over the primitives plus CLH/MCS baselines."""

from .locks import ClhLock, McsLock
from .workloads import (
    PRIMITIVES,
    BenchConfig,
    BenchRow,
    geometric_iterations,
    run_config,
    spin,
)

__all__ = [
    "PRIMITIVES",
    "BenchConfig",
    "BenchRow",
    "ClhLock",
    "McsLock",
    "geometric_iterations",
    "run_config",
    "spin",
]
