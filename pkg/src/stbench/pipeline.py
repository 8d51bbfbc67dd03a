"""Phase orchestration shared by the CLI subcommands and ``stbench all``."""

from __future__ import annotations

import logging
import os
import tempfile
from pathlib import Path
from typing import Callable, Sequence

from .analysis import Comparison, Report, compare, compute_report, export_report
from .config import SuiteConfig
from .datagen import export_dataset, generate_dataset, import_dataset
from .errors import SetupError, StbenchError
from .loadgen import RunLog, new_run_id, plan_workload, read_runlog, run, write_runlog
from .model import Dataset, summarize
from .query.dialects import DialectRegistry, default_registry, translate
from .query.instantiate import instantiate

log = logging.getLogger("stbench")


class OverwriteError(StbenchError):
    """Refusing to replace an existing artifact without ``--force``."""


def ensure_writable(path: Path, force: bool) -> None:
    if path.exists() and not force:
        raise OverwriteError(f"{path} already exists (use --force to overwrite)")


def atomic_write(path: Path, writer: Callable) -> int:
    """Write via a temporary file in the same directory, then rename."""
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(prefix=f".{path.name}.", dir=path.parent)
    try:
        with os.fdopen(fd, "wb") as fh:
            n = writer(fh)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    return n


def generate(cfg: SuiteConfig, out: Path, force: bool = False) -> Dataset:
    cfg.require("data")
    ensure_writable(out, force)
    log.info("Pre-Experiment: generating %d objects (seed %d)", cfg.data.n_objects, cfg.data.seed)
    dataset = generate_dataset(cfg.data)
    atomic_write(out, lambda fh: export_dataset(dataset, fh))
    log.info("Pre-Experiment: dataset written to %s", out)
    return dataset


def load_dataset(path: Path) -> Dataset:
    try:
        with open(path, "rb") as fh:
            return import_dataset(fh)
    except FileNotFoundError:
        raise SetupError(f"dataset file {path} does not exist") from None


def execute(cfg: SuiteConfig, dataset: Dataset, *, run_id: str | None = None,
            registry: DialectRegistry | None = None) -> RunLog:
    """Pre-Experiment (load, index, instantiate, translate, plan) then In-Experiment (run)."""
    cfg.require("queries", "sut", "workload")
    registry = registry or default_registry()
    q = cfg.queries
    summary = summarize(dataset)

    log.info("Pre-Experiment: instantiating %d queries (seed %d, dialect %s)", q.count, q.seed, q.dialect)
    queries = instantiate(q.templates, summary, q.seed, q.count, dataset=dataset)
    texts = [translate(i, q.dialect, registry) for i in queries]
    plan = plan_workload(queries, cfg.workload, payloads=texts)

    adapter = cfg.sut.create_adapter()
    try:
        log.info("Pre-Experiment: preparing adapter %r", cfg.sut.adapter)
        adapter.prepare()
        log.info("Pre-Experiment: loading %d points", summary.total_points)
        adapter.bulk_load(dataset)
        log.info("Pre-Experiment: building index %s", cfg.sut.index.kind)
        adapter.build_index(cfg.sut.index)
    except StbenchError:
        raise
    except Exception as exc:
        raise SetupError(f"adapter setup failed: {exc}") from exc

    w = cfg.workload
    log.info("In-Experiment: %d ops on %d workers (%s, %d warmup)", w.total_ops, w.workers, w.mode, w.warmup_ops)
    try:
        runlog = run(plan, adapter, w, run_id=run_id or new_run_id(), config_snapshot=cfg.snapshot())
    finally:
        adapter.teardown()
    errors = sum(1 for r in runlog.records if not r.ok)
    log.info("In-Experiment: finished run %s (%d records, %d errors)", runlog.run_id, len(runlog.records), errors)
    return runlog


def write_log(runlog: RunLog, out: Path, force: bool = False) -> None:
    ensure_writable(out, force)
    atomic_write(out, lambda fh: write_runlog(runlog, fh))


def read_logs(paths: Sequence[Path]) -> list[RunLog]:
    logs = []
    for p in paths:
        try:
            with open(p, "rb") as fh:
                logs.append(read_runlog(fh, name=str(p)))
        except FileNotFoundError:
            raise SetupError(f"run log {p} does not exist") from None
    return logs


def analyze(cfg: SuiteConfig, logs: Sequence[RunLog]) -> Report | Comparison:
    cfg.require("analysis")
    log.info("Post-Experiment: analyzing %d run log(s)", len(logs))
    reports = [compute_report(lg, cfg.analysis) for lg in logs]
    return reports[0] if len(reports) == 1 else compare(reports)


def write_report(obj: Report | Comparison, out: Path, fmt: str, force: bool = False) -> None:
    ensure_writable(out, force)
    atomic_write(out, lambda fh: export_report(obj, fmt, fh))
