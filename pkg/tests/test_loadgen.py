import io
import random
import time

import pytest

from stbench.errors import ConfigError, ParseError, SetupError
from stbench.loadgen import (
    MEASURED,
    WARMUP,
    OpRecord,
    RunLog,
    WorkloadConfig,
    plan_workload,
    read_runlog,
    run,
    write_runlog,
)
from stbench.model import TimeInterval
from stbench.query import QueryInstance, QueryKind

from conftest import ScriptedAdapter


def queries(n, kind=QueryKind.TEMPORAL_RANGE):
    return [QueryInstance(kind, i, interval=TimeInterval(i, i + 10)) for i in range(n)]


def roundtrip(runlog):
    buf = io.BytesIO()
    write_runlog(runlog, buf)
    buf.seek(0)
    return read_runlog(buf, "mem.log")


def test_plan_eight_tasks_four_workers():
    plan = plan_workload(queries(8), WorkloadConfig(workers=4, total_ops=8))
    assert plan.assignments == ((0, 4), (1, 5), (2, 6), (3, 7))


def test_plan_single_worker_and_uneven_split():
    assert plan_workload(queries(5), WorkloadConfig(1, 5)).assignments == ((0, 1, 2, 3, 4),)
    sizes = sorted(len(a) for a in plan_workload(queries(10), WorkloadConfig(3, 10)).assignments)
    assert sizes == [3, 3, 4]


def test_plan_more_workers_than_tasks():
    plan = plan_workload(queries(2), WorkloadConfig(5, 2))
    assert [len(a) for a in plan.assignments] == [1, 1, 0, 0, 0]


def test_plan_length_mismatch():
    with pytest.raises(ConfigError):
        plan_workload(queries(7), WorkloadConfig(2, 8))


@pytest.mark.parametrize("kwargs,field", [
    ({"workers": 0, "total_ops": 1}, "workers"),
    ({"workers": 1, "total_ops": 0}, "total_ops"),
    ({"workers": 1, "total_ops": 5, "warmup_ops": 5}, "warmup_ops"),
    ({"workers": 1, "total_ops": 5, "mode": "open"}, "mode"),
    ({"workers": 1, "total_ops": 5, "mode": "fixed_rate"}, "target_rate"),
    ({"workers": 1, "total_ops": 5, "target_rate": 10}, "target_rate"),
    ({"workers": 1, "total_ops": 5, "think_time_ms": -1}, "think_time_ms"),
])
def test_workload_config_validation(kwargs, field):
    with pytest.raises(ConfigError) as err:
        WorkloadConfig(**kwargs)
    assert err.value.field == field


def test_exactly_once_and_assignment():
    cfg = WorkloadConfig(workers=3, total_ops=31, warmup_ops=4)
    plan = plan_workload(queries(31), cfg)
    log = run(plan, ScriptedAdapter(), cfg)
    assert sorted(r.task_id for r in log.records) == list(range(31))
    assert all(r.worker_id == r.task_id % 3 for r in log.records)
    assert sum(r.phase == WARMUP for r in log.records) == 4
    assert all((r.phase == WARMUP) == (r.task_id < 4) for r in log.records)


def test_single_worker_runs_in_order():
    cfg = WorkloadConfig(1, 20)
    log = run(plan_workload(queries(20), cfg), ScriptedAdapter(), cfg)
    by_task = sorted(log.records, key=lambda r: r.task_id)
    starts = [r.start_ns for r in by_task]
    assert all(a < b for a, b in zip(starts, starts[1:]))
    assert [r.task_id for r in log.records] == list(range(20))


@pytest.mark.parametrize("n", [9, 10, 11])
def test_failures_are_recorded_not_fatal(n):
    cfg = WorkloadConfig(2, n)
    log = run(plan_workload(queries(n), cfg), ScriptedAdapter(fail_every=3), cfg)
    assert len(log.records) == n
    errors = [r for r in log.records if not r.ok]
    assert len(errors) == n // 3
    assert {r.outcome for r in errors} <= {"error:RuntimeError"}
    assert all(r.result_rows == 0 for r in errors)


def test_unreachable_adapter_is_setup_error():
    cfg = WorkloadConfig(2, 4)
    adapter = ScriptedAdapter(fail_setup=True)
    with pytest.raises(SetupError):
        run(plan_workload(queries(4), cfg), adapter, cfg)
    assert adapter.executed == []


def test_latency_reflects_adapter_time():
    latency = 0.02
    cfg = WorkloadConfig(2, 6)
    log = run(plan_workload(queries(6), cfg), ScriptedAdapter(latency_s=latency), cfg)
    for r in log.records:
        assert latency * 1e9 <= r.latency_ns < (latency + 0.1) * 1e9


def test_think_time_spaces_a_workers_ops():
    cfg = WorkloadConfig(1, 4, think_time_ms=15)
    log = run(plan_workload(queries(4), cfg), ScriptedAdapter(), cfg)
    rs = sorted(log.records, key=lambda r: r.task_id)
    gaps = [b.start_ns - a.end_ns for a, b in zip(rs, rs[1:])]
    assert all(g >= 15e6 for g in gaps)


def test_fixed_rate_schedule():
    cfg = WorkloadConfig(2, 10, mode="fixed_rate", target_rate=100)
    t = time.perf_counter()
    log = run(plan_workload(queries(10), cfg), ScriptedAdapter(), cfg)
    assert time.perf_counter() - t >= 0.09
    for r in log.records:
        assert r.start_ns >= r.task_id * 10_000_000 - 1_000_000


def test_warmup_boundary_is_a_barrier():
    cfg = WorkloadConfig(3, 30, warmup_ops=9)
    log = run(plan_workload(queries(30), cfg), ScriptedAdapter(latency_s=0.001), cfg)
    last_warm_end = max(r.end_ns for r in log.records if r.phase == WARMUP)
    first_measured = min(r.start_ns for r in log.records if r.phase == MEASURED)
    assert last_warm_end <= first_measured
    assert set(log.resources) == {"start", "boundary", "end"}


def test_records_ordered_by_completion():
    cfg = WorkloadConfig(4, 40)
    log = run(plan_workload(queries(40), cfg), ScriptedAdapter(latency_s=0.001), cfg)
    keys = [(r.end_ns, r.task_id) for r in log.records]
    assert keys == sorted(keys)
    back = roundtrip(log)
    assert [r.task_id for r in back.records] == [r.task_id for r in log.records]


def test_runlog_roundtrip_is_lossless():
    cfg = WorkloadConfig(2, 12, warmup_ops=2)
    log = run(plan_workload(queries(12), cfg), ScriptedAdapter(fail_every=5), cfg, run_id="r1",
              config_snapshot={"workload": cfg.to_dict()})
    back = roundtrip(log)
    assert back.run_id == "r1"
    assert back.records == log.records
    assert back.resources == log.resources
    assert back.config == log.config and back.plan == log.plan


def test_all_warmup_log_roundtrips():
    recs = [OpRecord(i, 0, QueryKind.KNN, WARMUP, i * 10, 5, "ok", 1) for i in range(3)]
    back = roundtrip(RunLog("w", {}, recs, "a", "b"))
    assert back.records == recs and back.measured() == []


@pytest.mark.parametrize("bad,line", [
    ('{"task_id": 0}', 3),
    ("not json", 3),
    ('{"task_id":1,"worker_id":0,"kind":"Nope","phase":"measured","start_ns":0,"latency_ns":1,'
     '"outcome":"ok","result_rows":0}', 3),
])
def test_malformed_record_reports_line(bad, line):
    good = OpRecord(0, 0, QueryKind.KNN, MEASURED, 0, 5, "ok", 1)
    buf = io.BytesIO()
    write_runlog(RunLog("x", {}, [good], "a", "b"), buf)
    data = buf.getvalue() + bad.encode() + b"\n"
    with pytest.raises(ParseError) as err:
        read_runlog(io.BytesIO(data), "x.log")
    assert err.value.line == line and err.value.source == "x.log"


def test_malformed_header():
    with pytest.raises(ParseError) as err:
        read_runlog(io.BytesIO(b"[1,2]\n"), "h.log")
    assert err.value.line == 1


def test_random_configurations_exactly_once():
    rng = random.Random(7)
    for _ in range(10):
        w, n = rng.randint(1, 8), rng.randint(1, 60)
        cfg = WorkloadConfig(w, n, warmup_ops=rng.randint(0, n - 1))
        log = run(plan_workload(queries(n), cfg), ScriptedAdapter(), cfg)
        assert sorted(r.task_id for r in log.records) == list(range(n))
