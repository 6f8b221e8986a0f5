"""Benchmark machinery: baseline locks, work generator, CSV contract."""

import random
import threading

import pytest

from cqsync.bench import ClhLock, McsLock, geometric_iterations
from cqsync.bench.cli import CSV_HEADER, main as bench_main
from cqsync.bench.workloads import (
    BenchConfig,
    BenchRow,
    _warmup_count,
    run_config,
    spin,
)


@pytest.mark.parametrize("make_lock", [ClhLock, McsLock],
                         ids=["clh", "mcs"])
def test_queue_locks_preserve_mutual_exclusion(make_lock):
    lock = make_lock()
    state = {"counter": 0}

    def body():
        for _ in range(2_000):
            lock.lock()
            state["counter"] += 1
            lock.unlock()

    threads = [threading.Thread(target=body) for _ in range(4)]
    for t in threads:
        t.start()
    for t in threads:
        t.join(timeout=60)
    assert not any(t.is_alive() for t in threads)
    assert state["counter"] == 8_000


@pytest.mark.parametrize("make_lock", [ClhLock, McsLock],
                         ids=["clh", "mcs"])
def test_queue_locks_recycle_per_thread_nodes(make_lock):
    lock = make_lock()
    for _ in range(100):
        lock.lock()
        lock.unlock()


def test_geometric_iterations_mean():
    rng = random.Random(42)
    draws = [geometric_iterations(rng, 100) for _ in range(40_000)]
    mean = sum(draws) / len(draws)
    assert 90 <= mean <= 110
    assert min(draws) >= 1


def test_geometric_iterations_edge_cases():
    rng = random.Random(1)
    assert geometric_iterations(rng, 0) == 0
    assert geometric_iterations(rng, -5) == 0
    assert geometric_iterations(rng, 1) == 1


def test_spin_accepts_zero():
    spin(0)


def test_warmup_discard_policy():
    assert _warmup_count(1) == 0
    assert _warmup_count(2) == 1
    assert _warmup_count(5) == 1
    assert _warmup_count(10) == 2


def test_bench_row_csv_shape():
    row = BenchRow("mutex", 2, 1, 1234.56, 10.04, 1000)
    assert row.as_csv() == "mutex,2,1,1234.6,10.0,1000"


def test_csv_header_is_pinned():
    assert CSV_HEADER == "primitive,threads,param,mean_ns,std_ns,ops"


def test_run_config_produces_one_row_per_thread_count():
    config = BenchConfig(primitive="semaphore", threads=[1, 2], param=2,
                         work_in=5, work_out=5, ops=400, repetitions=2)
    rows = run_config(config)
    assert [row.threads for row in rows] == [1, 2]
    for row in rows:
        assert row.primitive == "semaphore"
        assert row.param == 2
        assert row.ops == 400
        assert row.mean_ns > 0


def test_cli_writes_csv_file(tmp_path):
    out = tmp_path / "bench.csv"
    code = bench_main(["--primitive", "mutex", "--threads", "1,2",
                       "--ops", "300", "--repetitions", "2",
                       "--work-in", "5", "--work-out", "5",
                       "--out", str(out)])
    assert code == 0
    lines = out.read_text(encoding="utf-8").strip().splitlines()
    assert lines[0] == CSV_HEADER
    assert len(lines) == 3
    assert lines[1].startswith("mutex,1,")


def test_cli_writes_stdout_by_default(capsys):
    code = bench_main(["--primitive", "latch", "--threads", "2",
                       "--ops", "200", "--repetitions", "2",
                       "--work-in", "0", "--work-out", "0"])
    assert code == 0
    out = capsys.readouterr().out.splitlines()
    assert out[0] == CSV_HEADER
    assert len(out) == 2


@pytest.mark.parametrize("threads", ["", "0", "two", "1,,0"])
def test_cli_rejects_bad_thread_lists(threads):
    with pytest.raises(SystemExit):
        bench_main(["--primitive", "mutex", "--threads", threads])
