"""Load-generation coordinator: exactly-once planning, concurrent workers, run logs.

Workers are threads in this process. The seam between coordinator and
workers is the plan (in) and per-worker OpRecord buffers (out); a remote
transport would only need to ship those.
"""

from __future__ import annotations

import json
import logging
import threading
import time
import uuid
from dataclasses import asdict, dataclass, field
from datetime import datetime, timezone
from typing import Any, BinaryIO, Callable, Mapping, Sequence

from .errors import ConfigError, ParseError, SetupError
from .query.dialects import emit_neutral
from .query.model import QueryInstance, QueryKind, QueryText
from .sut.base import ResourceSample, SutAdapter

log = logging.getLogger(__name__)

WARMUP = "warmup"
MEASURED = "measured"
OK = "ok"

RECORD_FIELDS = ("task_id", "worker_id", "kind", "phase", "start_ns", "latency_ns", "outcome", "result_rows")


def _pos_int(v) -> bool:
    return isinstance(v, int) and not isinstance(v, bool) and v > 0


@dataclass(frozen=True)
class WorkloadConfig:
    workers: int
    total_ops: int
    warmup_ops: int = 0
    mode: str = "closed_loop"
    target_rate: float | None = None
    think_time_ms: int = 0

    def __post_init__(self):
        if not _pos_int(self.workers):
            raise ConfigError("workers", "must be a positive integer")
        if not _pos_int(self.total_ops):
            raise ConfigError("total_ops", "must be a positive integer")
        if isinstance(self.warmup_ops, bool) or not isinstance(self.warmup_ops, int) \
                or not 0 <= self.warmup_ops < self.total_ops:
            raise ConfigError("warmup_ops", "must be an integer in [0, total_ops)")
        if self.mode not in ("closed_loop", "fixed_rate"):
            raise ConfigError("mode", f"must be 'closed_loop' or 'fixed_rate', got {self.mode!r}")
        if self.mode == "fixed_rate":
            r = self.target_rate
            if isinstance(r, bool) or not isinstance(r, (int, float)) or not r > 0:
                raise ConfigError("target_rate", "must be > 0 in fixed_rate mode")
        elif self.target_rate is not None:
            raise ConfigError("target_rate", "only applies to fixed_rate mode")
        if isinstance(self.think_time_ms, bool) or not isinstance(self.think_time_ms, int) or self.think_time_ms < 0:
            raise ConfigError("think_time_ms", "must be a non-negative integer")

    @classmethod
    def from_mapping(cls, data: Mapping[str, Any]) -> WorkloadConfig:
        unknown = set(data) - {f for f in cls.__dataclass_fields__}
        if unknown:
            raise ConfigError(sorted(unknown)[0], "unknown workload field")
        for key in ("workers", "total_ops"):
            if key not in data:
                raise ConfigError(key, "is required")
        return cls(**data)

    def to_dict(self) -> dict[str, Any]:
        return asdict(self)


@dataclass(frozen=True)
class WorkloadPlan:
    """Task ``i`` is ``tasks[i]``; worker ``w`` runs ``assignments[w]`` in order.

    ``payloads`` optionally holds the translated text actually sent to the SUT.
    """

    assignments: tuple[tuple[int, ...], ...]
    tasks: Mapping[int, QueryInstance]
    warmup_ops: int
    payloads: Mapping[int, QueryText] | None = None

    def phase_of(self, task_id: int) -> str:
        return WARMUP if task_id < self.warmup_ops else MEASURED

    def kind_counts(self) -> dict[QueryKind, int]:
        out: dict[QueryKind, int] = {}
        for q in self.tasks.values():
            out[q.kind] = out.get(q.kind, 0) + 1
        return out

    def describe(self) -> dict[str, Any]:
        """JSON-ready description: assignments plus each task's kind and neutral text."""
        return {
            "workers": len(self.assignments),
            "warmup_ops": self.warmup_ops,
            "assignments": [list(a) for a in self.assignments],
            "tasks": [
                {"task_id": tid, "kind": str(q.kind), "query": emit_neutral(q)}
                for tid, q in sorted(self.tasks.items())
            ],
        }


def plan_workload(queries: Sequence[QueryInstance], cfg: WorkloadConfig,
                  payloads: Sequence[QueryText] | None = None) -> WorkloadPlan:
    """Round-robin: task ``i`` goes to worker ``i % workers``; first ``warmup_ops`` tasks are warmup."""
    if len(queries) != cfg.total_ops:
        raise ConfigError("total_ops", f"plan needs {cfg.total_ops} queries, got {len(queries)}")
    if payloads is not None and len(payloads) != len(queries):
        raise ConfigError("payloads", "one payload per query is required")
    assignments = tuple(tuple(range(w, cfg.total_ops, cfg.workers)) for w in range(cfg.workers))
    return WorkloadPlan(
        assignments=assignments,
        tasks=dict(enumerate(queries)),
        warmup_ops=cfg.warmup_ops,
        payloads=dict(enumerate(payloads)) if payloads is not None else None,
    )


@dataclass(frozen=True)
class OpRecord:
    task_id: int
    worker_id: int
    kind: QueryKind
    phase: str
    start_ns: int
    latency_ns: int
    outcome: str
    result_rows: int

    @property
    def ok(self) -> bool:
        return self.outcome == OK

    @property
    def end_ns(self) -> int:
        return self.start_ns + self.latency_ns

    def to_dict(self) -> dict[str, Any]:
        d = asdict(self)
        d["kind"] = str(self.kind)
        return d

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> OpRecord:
        missing = [k for k in RECORD_FIELDS if k not in data]
        if missing:
            raise ValueError(f"missing fields {missing}")
        extra = sorted(set(data) - set(RECORD_FIELDS))
        if extra:
            raise ValueError(f"unexpected fields {extra}")
        if data["phase"] not in (WARMUP, MEASURED):
            raise ValueError(f"bad phase {data['phase']!r}")
        for k in ("task_id", "worker_id", "start_ns", "latency_ns", "result_rows"):
            if not isinstance(data[k], int) or isinstance(data[k], bool):
                raise ValueError(f"{k} must be an integer")
        if data["latency_ns"] < 0:
            raise ValueError("latency_ns must be >= 0")
        return cls(data["task_id"], data["worker_id"], QueryKind(data["kind"]), data["phase"],
                   data["start_ns"], data["latency_ns"], data["outcome"], data["result_rows"])


@dataclass
class RunLog:
    run_id: str
    config: dict[str, Any]
    records: list[OpRecord]
    started_at: str
    ended_at: str
    resources: dict[str, ResourceSample] = field(default_factory=dict)
    plan: dict[str, Any] | None = None

    def measured(self) -> list[OpRecord]:
        return [r for r in self.records if r.phase == MEASURED]


def new_run_id() -> str:
    stamp = datetime.now(timezone.utc).strftime("%Y%m%dT%H%M%SZ")
    return f"{stamp}-{uuid.uuid4().hex[:6]}"


def _now_iso() -> str:
    return datetime.now(timezone.utc).isoformat(timespec="microseconds")


def _error_code(exc: BaseException) -> str:
    return f"error:{type(exc).__name__}"


def run(plan: WorkloadPlan, adapter: SutAdapter, cfg: WorkloadConfig, *,
        run_id: str | None = None, config_snapshot: Mapping[str, Any] | None = None,
        clock: Callable[[], int] = time.perf_counter_ns) -> RunLog:
    """Drive ``adapter`` with ``plan``; one OpRecord per task, merged by completion time.

    Adapter failures become ``error:<ExceptionName>`` outcomes and never stop
    the run. The only exception is a failing first resource snapshot, which
    is treated as a setup error before any operation is dispatched.
    """
    n_workers = len(plan.assignments)
    try:
        start_sample = adapter.resource_snapshot()
    except Exception as exc:
        raise SetupError(f"adapter {getattr(adapter, 'name', adapter)!r} not reachable: {exc}") from exc

    samples: dict[str, ResourceSample] = {"start": start_sample}
    buffers: list[list[OpRecord]] = [[] for _ in range(n_workers)]
    failures: list[BaseException] = []
    interval_ns = 1e9 / cfg.target_rate if cfg.mode == "fixed_rate" else 0.0
    think_s = cfg.think_time_ms / 1000.0

    def boundary():
        try:
            samples["boundary"] = adapter.resource_snapshot()
        except Exception:
            log.warning("resource snapshot at warmup boundary failed", exc_info=True)

    barrier = threading.Barrier(n_workers, action=boundary) if plan.warmup_ops else None
    if barrier is None:
        samples["boundary"] = start_sample

    started_at = _now_iso()
    t0 = clock()

    def worker(wid: int) -> None:
        buf = buffers[wid]
        tasks = plan.assignments[wid]
        passed_barrier = barrier is None
        for n, tid in enumerate(tasks):
            phase = plan.phase_of(tid)
            if not passed_barrier and phase == MEASURED:
                barrier.wait()
                passed_barrier = True
            if interval_ns:
                delay = (t0 + tid * interval_ns - clock()) / 1e9
                if delay > 0:
                    time.sleep(delay)
            elif think_s and n:
                time.sleep(think_s)
            q = plan.tasks[tid]
            payload = plan.payloads[tid] if plan.payloads is not None else q
            begin = clock()
            try:
                result = adapter.execute(payload)
                end = clock()
                outcome, rows = OK, result.row_count or 0
            except Exception as exc:
                end = clock()
                outcome, rows = _error_code(exc), 0
            buf.append(OpRecord(tid, wid, q.kind, phase, begin - t0, end - begin, outcome, rows))
        if not passed_barrier:
            barrier.wait()

    def guarded(wid: int) -> None:
        try:
            worker(wid)
        except BaseException as exc:  # pragma: no cover - defensive
            failures.append(exc)
            if barrier is not None:
                barrier.abort()

    threads = [threading.Thread(target=guarded, args=(w,), name=f"stbench-worker-{w}") for w in range(n_workers)]
    for th in threads:
        th.start()
    for th in threads:
        th.join()
    if failures:
        raise failures[0]
    ended_at = _now_iso()
    try:
        samples["end"] = adapter.resource_snapshot()
    except Exception:
        log.warning("final resource snapshot failed", exc_info=True)

    records = sorted((r for buf in buffers for r in buf), key=lambda r: (r.end_ns, r.task_id))
    return RunLog(
        run_id=run_id or new_run_id(),
        config=dict(config_snapshot) if config_snapshot is not None else {"workload": cfg.to_dict()},
        records=records,
        started_at=started_at,
        ended_at=ended_at,
        resources=samples,
        plan=plan.describe(),
    )


def _dumps(obj: Any) -> str:
    return json.dumps(obj, sort_keys=False, separators=(",", ":"), allow_nan=False)


def write_runlog(runlog: RunLog, sink: BinaryIO) -> int:
    """Header line, then one JSON object per OpRecord in log (completion) order."""
    header = {
        "run_id": runlog.run_id,
        "started_at": runlog.started_at,
        "ended_at": runlog.ended_at,
        "config": runlog.config,
        "resources": {k: v.to_dict() for k, v in runlog.resources.items()},
        "plan": runlog.plan,
    }
    lines = [_dumps(header)]
    lines.extend(_dumps(r.to_dict()) for r in runlog.records)
    data = ("\n".join(lines) + "\n").encode("utf-8")
    sink.write(data)
    return len(data)


def read_runlog(source: BinaryIO, name: str | None = None) -> RunLog:
    raw = source.read()
    text = raw.decode("utf-8") if isinstance(raw, (bytes, bytearray)) else raw
    lines = text.splitlines()
    if not lines:
        raise ParseError("empty run log", line=1, source=name)
    try:
        header = json.loads(lines[0])
        if not isinstance(header, dict) or "run_id" not in header:
            raise ValueError("header must be an object with run_id")
        resources = {k: ResourceSample.from_dict(v) for k, v in (header.get("resources") or {}).items()}
    except (ValueError, TypeError, AttributeError) as exc:
        raise ParseError(f"bad header: {exc}", line=1, source=name) from None
    records = []
    for lineno, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        try:
            data = json.loads(line)
            if not isinstance(data, dict):
                raise ValueError("record must be an object")
            records.append(OpRecord.from_dict(data))
        except (ValueError, TypeError) as exc:
            raise ParseError(f"bad record: {exc}", line=lineno, source=name) from None
    return RunLog(
        run_id=header["run_id"],
        config=header.get("config") or {},
        records=records,
        started_at=header.get("started_at", ""),
        ended_at=header.get("ended_at", ""),
        resources=resources,
        plan=header.get("plan"),
    )
