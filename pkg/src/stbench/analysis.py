"""Post-experiment metrics, cross-run comparison and report export."""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field
from typing import Any, BinaryIO, Iterable, Mapping, Sequence

from .errors import ComparisonError, ConfigError, EmptyWindowError, ParseError
from .loadgen import MEASURED, OpRecord, RunLog

METRICS = ("throughput", "latency_mean", "latency_p50", "latency_p95", "latency_p99",
           "error_rate", "resource_usage")
GROUP_FIELDS = ("kind", "worker_id")
UNITS = {
    "throughput": "ops/s",
    "latency_mean": "ns",
    "latency_p50": "ns",
    "latency_p95": "ns",
    "latency_p99": "ns",
    "error_rate": "fraction",
}
RESOURCE_UNITS = {
    "rows_scanned": "rows",
    "cells_visited": "cells",
    "points_stored": "points",
    "bytes_estimated": "bytes",
}
UNDEFINED = "undefined"
ALL_GROUP = "all"


@dataclass(frozen=True)
class AnalysisConfig:
    metrics: tuple[str, ...] = ("throughput", "latency_mean", "latency_p50", "latency_p95", "latency_p99",
                                "error_rate")
    group_by: tuple[str, ...] = ()
    include_warmup: bool = False

    def __post_init__(self):
        object.__setattr__(self, "metrics", tuple(self.metrics))
        object.__setattr__(self, "group_by", tuple(self.group_by))
        if not self.metrics:
            raise ConfigError("metrics", "must name at least one metric")
        for m in self.metrics:
            if m not in METRICS:
                raise ConfigError("metrics", f"unknown metric {m!r} (expected one of {', '.join(METRICS)})")
        for g in self.group_by:
            if g not in GROUP_FIELDS:
                raise ConfigError("group_by", f"unknown group field {g!r} (expected kind or worker_id)")
        if len(set(self.group_by)) != len(self.group_by):
            raise ConfigError("group_by", "duplicate group field")
        if not isinstance(self.include_warmup, bool):
            raise ConfigError("include_warmup", "must be a boolean")

    @classmethod
    def from_mapping(cls, data: Mapping[str, Any]) -> AnalysisConfig:
        unknown = set(data) - {"metrics", "group_by", "include_warmup"}
        if unknown:
            raise ConfigError(sorted(unknown)[0], "unknown analysis field")
        return cls(**data)

    @property
    def group_metrics(self) -> tuple[str, ...]:
        return tuple(m for m in self.metrics if m != "resource_usage")


@dataclass(frozen=True)
class Metric:
    value: float | int | None  # None is the undefined marker
    unit: str


@dataclass
class Report:
    run_id: str
    metrics: tuple[str, ...]
    group_by: tuple[str, ...]
    window: dict[str, Any]
    groups: dict[str, dict[str, Metric]]
    group_counts: dict[str, int]
    resource_deltas: dict[str, int | None] | None = None

    def missing_metrics(self) -> list[str]:
        """Requested metrics absent from the report, as ``group/metric`` strings."""
        missing = []
        for key, table in self.groups.items():
            if self.group_counts.get(key, 0) == 0:
                continue
            missing.extend(f"{key}/{m}" for m in self.metrics if m != "resource_usage" and m not in table)
        if "resource_usage" in self.metrics and self.resource_deltas is None:
            missing.append("run/resource_usage")
        return missing


def nearest_rank(sorted_values: Sequence[int | float], p: float):
    """Value at rank ceil(p * n) (1-based) of an ascending sample, 0 < p <= 1."""
    if not 0 < p <= 1:
        raise ValueError("p must lie in (0, 1]")
    n = len(sorted_values)
    if n == 0:
        raise ValueError("empty sample")
    rank = max(1, math.ceil(p * n))
    return sorted_values[rank - 1]


_PERCENTILES = {"latency_p50": 0.5, "latency_p95": 0.95, "latency_p99": 0.99}


def _group_key(r: OpRecord, group_by: Sequence[str]) -> str:
    if not group_by:
        return ALL_GROUP
    parts = []
    for g in group_by:
        parts.append(f"kind={r.kind}" if g == "kind" else f"worker_id={r.worker_id}")
    return ";".join(parts)


def _group_metrics(records: list[OpRecord], metrics: Sequence[str], duration_s: float | None) -> dict[str, Metric]:
    latencies = sorted(r.latency_ns for r in records if r.ok)
    out: dict[str, Metric] = {}
    for m in metrics:
        if m == "throughput":
            value = len(records) / duration_s if duration_s else None
        elif m == "latency_mean":
            value = sum(latencies) / len(latencies) if latencies else None
        elif m in _PERCENTILES:
            value = nearest_rank(latencies, _PERCENTILES[m]) if latencies else None
        elif m == "error_rate":
            value = sum(1 for r in records if not r.ok) / len(records)
        else:
            continue
        out[m] = Metric(value, UNITS[m])
    return out


def compute_report(runlog: RunLog, cfg: AnalysisConfig) -> Report:
    """Metrics over the measured phase (or everything, with ``include_warmup``)."""
    records = list(runlog.records) if cfg.include_warmup else [r for r in runlog.records if r.phase == MEASURED]
    if not records:
        raise EmptyWindowError(f"run {runlog.run_id}: no records in the analysis window")
    start = min(r.start_ns for r in records)
    end = max(r.end_ns for r in records)
    duration_s = (end - start) / 1e9
    grouped: dict[str, list[OpRecord]] = {}
    for r in records:
        grouped.setdefault(_group_key(r, cfg.group_by), []).append(r)
    keys = sorted(grouped)
    groups = {k: _group_metrics(grouped[k], cfg.group_metrics, duration_s) for k in keys}

    resources = None
    if "resource_usage" in cfg.metrics:
        first = runlog.resources.get("start" if cfg.include_warmup else "boundary")
        last = runlog.resources.get("end")
        if first is not None and last is not None:
            resources = last.delta(first)
        else:
            resources = {name: None for name in RESOURCE_UNITS}

    window = {
        "start_ns": start,
        "end_ns": end,
        "duration_s": duration_s,
        "started_at": runlog.started_at,
        "ended_at": runlog.ended_at,
        "ops": len(records),
        "measured_ops": sum(1 for r in runlog.records if r.phase == MEASURED),
        "warmup_ops": sum(1 for r in runlog.records if r.phase != MEASURED),
        "include_warmup": cfg.include_warmup,
    }
    return Report(
        run_id=runlog.run_id,
        metrics=cfg.metrics,
        group_by=cfg.group_by,
        window=window,
        groups=groups,
        group_counts={k: len(grouped[k]) for k in keys},
        resource_deltas=resources,
    )


# -- comparison ------------------------------------------------------------

@dataclass(frozen=True)
class ComparisonRow:
    group: str
    metric: str
    unit: str
    values: tuple[float | int | None, ...]
    deltas_pct: tuple[float | None, ...]


@dataclass
class Comparison:
    run_ids: tuple[str, ...]
    rows: list[ComparisonRow] = field(default_factory=list)

    def row(self, group: str, metric: str) -> ComparisonRow:
        for r in self.rows:
            if r.group == group and r.metric == metric:
                return r
        raise KeyError((group, metric))


def _relative_pct(base, value) -> float | None:
    if base is None or value is None:
        return None
    if base == 0:
        return 0.0 if value == 0 else None
    return (value - base) / base * 100.0


def _flat(report: Report) -> dict[tuple[str, str], Metric]:
    flat = {(g, m): metric for g, table in report.groups.items() for m, metric in table.items()}
    for name, value in (report.resource_deltas or {}).items():
        flat[("run", f"resource_usage.{name}")] = Metric(value, RESOURCE_UNITS.get(name, ""))
    return flat


def compare(reports: Sequence[Report]) -> Comparison:
    """Side-by-side values with percentage deltas against the first report."""
    if len(reports) < 2:
        raise ComparisonError("comparison needs at least two reports")
    flats = [_flat(r) for r in reports]
    base_keys = set(flats[0])
    for r, flat in zip(reports[1:], flats[1:]):
        missing = sorted(base_keys - set(flat))
        extra = sorted(set(flat) - base_keys)
        if missing or extra:
            parts = []
            if missing:
                parts.append("missing " + ", ".join(f"{g}/{m}" for g, m in missing))
            if extra:
                parts.append("unexpected " + ", ".join(f"{g}/{m}" for g, m in extra))
            raise ComparisonError(f"report {r.run_id} does not match baseline {reports[0].run_id}: {'; '.join(parts)}")
    rows = []
    for key in sorted(base_keys):
        values = tuple(flat[key].value for flat in flats)
        rows.append(ComparisonRow(key[0], key[1], flats[0][key].unit, values,
                                  tuple(_relative_pct(values[0], v) for v in values)))
    return Comparison(tuple(r.run_id for r in reports), rows)


# -- export ----------------------------------------------------------------

def _enc(v):
    return UNDEFINED if v is None else v


def _dec(v):
    return None if v == UNDEFINED else v


def report_to_dict(r: Report) -> dict[str, Any]:
    return {
        "type": "report",
        "run_id": r.run_id,
        "metrics": list(r.metrics),
        "group_by": list(r.group_by),
        "window": r.window,
        "groups": {
            g: {"count": r.group_counts[g],
                "metrics": {m: {"value": _enc(x.value), "unit": x.unit} for m, x in table.items()}}
            for g, table in r.groups.items()
        },
        "resource_deltas": None if r.resource_deltas is None else {
            k: {"value": _enc(v), "unit": RESOURCE_UNITS.get(k, "")} for k, v in r.resource_deltas.items()
        },
    }


def report_from_dict(d: Mapping[str, Any]) -> Report:
    groups, counts = {}, {}
    for g, entry in d["groups"].items():
        counts[g] = entry["count"]
        groups[g] = {m: Metric(_dec(x["value"]), x["unit"]) for m, x in entry["metrics"].items()}
    res = d.get("resource_deltas")
    return Report(
        run_id=d["run_id"],
        metrics=tuple(d["metrics"]),
        group_by=tuple(d["group_by"]),
        window=dict(d["window"]),
        groups=groups,
        group_counts=counts,
        resource_deltas=None if res is None else {k: _dec(v["value"]) for k, v in res.items()},
    )


def comparison_to_dict(c: Comparison) -> dict[str, Any]:
    return {
        "type": "comparison",
        "baseline": c.run_ids[0],
        "run_ids": list(c.run_ids),
        "rows": [
            {"group": r.group, "metric": r.metric, "unit": r.unit,
             "values": [_enc(v) for v in r.values], "deltas_pct": [_enc(v) for v in r.deltas_pct]}
            for r in c.rows
        ],
    }


def comparison_from_dict(d: Mapping[str, Any]) -> Comparison:
    rows = [ComparisonRow(r["group"], r["metric"], r["unit"],
                          tuple(_dec(v) for v in r["values"]), tuple(_dec(v) for v in r["deltas_pct"]))
            for r in d["rows"]]
    return Comparison(tuple(d["run_ids"]), rows)


def _cell(v) -> str:
    if v is None:
        return UNDEFINED
    return repr(v) if isinstance(v, float) else str(v)


def _tabular(obj: Report | Comparison) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    if isinstance(obj, Report):
        w.writerow(["group", "metric", "value", "unit"])
        for g, table in obj.groups.items():
            for m, x in table.items():
                w.writerow([g, m, _cell(x.value), x.unit])
        for k, v in (obj.resource_deltas or {}).items():
            w.writerow(["run", f"resource_usage.{k}", _cell(v), RESOURCE_UNITS.get(k, "")])
    else:
        w.writerow(["group", "metric", "unit", "run_id", "value", "delta_pct"])
        for r in obj.rows:
            for run_id, v, d in zip(obj.run_ids, r.values, r.deltas_pct):
                w.writerow([r.group, r.metric, r.unit, run_id, _cell(v), _cell(d)])
    return buf.getvalue()


def export_report(obj: Report | Comparison, fmt: str, sink: BinaryIO) -> int:
    """``structured`` (JSON document) or ``tabular`` (CSV); returns bytes written."""
    if fmt in ("structured", "json"):
        doc = report_to_dict(obj) if isinstance(obj, Report) else comparison_to_dict(obj)
        text = json.dumps(doc, indent=2, allow_nan=False) + "\n"
    elif fmt in ("tabular", "csv"):
        text = _tabular(obj)
    else:
        raise ConfigError("format", f"unknown export format {fmt!r} (structured or tabular)")
    data = text.encode("utf-8")
    sink.write(data)
    return len(data)


def import_report(source: BinaryIO) -> Report | Comparison:
    raw = source.read()
    try:
        doc = json.loads(raw)
    except ValueError as exc:
        raise ParseError(f"not a structured report: {exc}") from None
    kind = doc.get("type") if isinstance(doc, dict) else None
    if kind == "report":
        return report_from_dict(doc)
    if kind == "comparison":
        return comparison_from_dict(doc)
    raise ParseError("document is neither a report nor a comparison")


def render_summary(obj: Report | Comparison) -> Iterable[str]:
    """Short human-readable lines for the console."""
    if isinstance(obj, Report):
        yield f"run {obj.run_id}: {obj.window['ops']} ops over {obj.window['duration_s']:.3f} s"
        for g, table in obj.groups.items():
            cells = ", ".join(f"{m}={_cell(x.value)} {x.unit}" for m, x in table.items())
            yield f"  [{g}] n={obj.group_counts[g]} {cells}"
        if obj.resource_deltas is not None:
            yield "  resources: " + ", ".join(f"{k}={_cell(v)}" for k, v in obj.resource_deltas.items())
    else:
        yield f"comparison baseline={obj.run_ids[0]} against {', '.join(obj.run_ids[1:])}"
        for r in obj.rows:
            deltas = ", ".join("undefined" if d is None else f"{d:+.1f}%" for d in r.deltas_pct[1:])
            yield f"  [{r.group}] {r.metric}: {deltas}"
