"""``stbench`` command line: validate | generate | run | analyze | all.

Exit status: 0 success, 1 validation/config error, 2 runtime error.
"""

from __future__ import annotations

import argparse
import logging
import os
import sys
from pathlib import Path

from . import pipeline
from .analysis import render_summary
from .config import load_config, parse_yaml, check
from .errors import ConfigError, ParseError, StbenchError
from .model import summarize

EXIT_OK, EXIT_CONFIG, EXIT_RUNTIME = 0, 1, 2
LOG_LEVELS = {"error": logging.ERROR, "info": logging.INFO, "debug": logging.DEBUG}

log = logging.getLogger("stbench")


def _setup_logging() -> None:
    name = os.environ.get("STBENCH_LOG", "info").lower()
    level = LOG_LEVELS.get(name, logging.INFO)
    logging.basicConfig(level=level, stream=sys.stderr,
                        format="%(asctime)s %(levelname)s %(message)s", force=True)
    if name not in LOG_LEVELS:
        log.warning("STBENCH_LOG=%r not recognized; using info", name)


def _print_summary(dataset) -> None:
    s = summarize(dataset)
    print(f"objects={s.object_count} points={s.total_points} "
          f"mean_trajectory_length={s.mean_trajectory_length:g} "
          f"extent=[({s.extent.min.x:g}, {s.extent.min.y:g}), ({s.extent.max.x:g}, {s.extent.max.y:g})] "
          f"time_span=[{s.time_span.start}, {s.time_span.end}]")


def cmd_validate(args) -> int:
    path = Path(args.config)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        print(f"error: cannot read {path}: {exc.strerror or exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        raw = parse_yaml(text, source=str(path))
    except ParseError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    cfg, diags = check(raw, path=path)
    for d in diags:
        print(str(d), file=sys.stderr)
    return EXIT_OK if cfg is not None else EXIT_CONFIG


def cmd_generate(args) -> int:
    cfg, _ = load_config(args.config)
    out = Path(args.out or "dataset.csv")
    dataset = pipeline.generate(cfg, out, args.force)
    _print_summary(dataset)
    return EXIT_OK


def cmd_run(args) -> int:
    cfg, _ = load_config(args.config)
    cfg.require("queries", "sut", "workload")
    out = Path(args.out) if args.out else None
    if out is not None:
        pipeline.ensure_writable(out, args.force)
    dataset = pipeline.load_dataset(Path(args.dataset))
    runlog = pipeline.execute(cfg, dataset)
    out = out or Path(f"run-{runlog.run_id}.log")
    pipeline.write_log(runlog, out, args.force)
    print(f"run {runlog.run_id}: {len(runlog.records)} records -> {out}")
    return EXIT_OK


def _format_for(out: Path, fmt: str | None) -> str:
    if fmt:
        return fmt
    return "tabular" if out.suffix.lower() in (".csv", ".tsv") else "structured"


def cmd_analyze(args) -> int:
    cfg, _ = load_config(args.config)
    cfg.require("analysis")
    out = Path(args.out or "report.json")
    pipeline.ensure_writable(out, args.force)
    logs = pipeline.read_logs([Path(p) for p in args.runlogs])
    result = pipeline.analyze(cfg, logs)
    pipeline.write_report(result, out, _format_for(out, args.format), args.force)
    for line in render_summary(result):
        print(line)
    return EXIT_OK


def cmd_all(args) -> int:
    cfg, _ = load_config(args.config)
    cfg.require("data", "queries", "sut", "workload")
    workdir = Path(args.workdir or ".")
    workdir.mkdir(parents=True, exist_ok=True)
    dataset_path = workdir / "dataset.csv"
    if not args.force:
        existing = [p for p in [dataset_path, *workdir.glob("run-*.log"), *workdir.glob("report-*.json")]
                    if p.exists()]
        if existing:
            raise pipeline.OverwriteError(
                f"{workdir} already holds artifacts ({', '.join(p.name for p in existing)}); use --force")

    dataset = pipeline.generate(cfg, dataset_path, force=True)
    _print_summary(dataset)
    runlog = pipeline.execute(cfg, dataset)
    log_path = workdir / f"run-{runlog.run_id}.log"
    pipeline.write_log(runlog, log_path, force=True)
    print(f"run {runlog.run_id}: {len(runlog.records)} records -> {log_path}")
    if cfg.analysis is None:
        print("notice: no 'analysis' section in config; stopping after the run phase")
        return EXIT_OK
    report = pipeline.analyze(cfg, [runlog])
    report_path = workdir / f"report-{runlog.run_id}.json"
    pipeline.write_report(report, report_path, "structured", force=True)
    for line in render_summary(report):
        print(line)
    print(f"report -> {report_path}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="stbench", description="Spatiotemporal database benchmark suite")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, out=True):
        sp.add_argument("--config", required=True, help="suite configuration (YAML)")
        if out:
            sp.add_argument("--out", help="output path")
        sp.add_argument("--force", action="store_true", help="overwrite existing artifacts")

    sp = sub.add_parser("validate", help="check a suite configuration")
    sp.add_argument("--config", required=True)
    sp.set_defaults(func=cmd_validate)

    sp = sub.add_parser("generate", help="generate a dataset (Pre-Experiment)")
    common(sp)
    sp.set_defaults(func=cmd_generate)

    sp = sub.add_parser("run", help="load, index and drive the SUT (Pre- and In-Experiment)")
    common(sp)
    sp.add_argument("--dataset", required=True, help="dataset file in interchange format")
    sp.set_defaults(func=cmd_run)

    sp = sub.add_parser("analyze", help="compute a report or comparison (Post-Experiment)")
    common(sp)
    sp.add_argument("--format", choices=["structured", "tabular"], help="default: from --out suffix")
    sp.add_argument("runlogs", nargs="+", help="run log files; the first is the baseline")
    sp.set_defaults(func=cmd_analyze)

    sp = sub.add_parser("all", help="generate -> run -> analyze in one go")
    common(sp, out=False)
    sp.add_argument("--workdir", help="directory for dataset.csv, run-<id>.log, report-<id>.json")
    sp.set_defaults(func=cmd_all)
    return p


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    _setup_logging()
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (StbenchError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
