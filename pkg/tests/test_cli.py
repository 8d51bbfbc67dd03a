import json
import subprocess
import sys
from pathlib import Path

import pytest
import yaml

from stbench.cli import main

BASE = {
    "data": {"seed": 5, "n_objects": 10, "points_per_object": 20,
             "region": {"min": [0.0, 0.0], "max": [100.0, 100.0]},
             "speed_min": 0.5, "speed_max": 3.0, "sample_interval_ms": 1000},
    "queries": {"seed": 3, "count": 200, "dialect": "neutral", "templates": [
        {"kind": "SpatialRange", "weight": 2, "spatial_fraction": 0.2, "anchored": True},
        {"kind": "TemporalRange", "weight": 1, "temporal_fraction": 0.1},
        {"kind": "KNearestNeighbors", "weight": 1, "k": 3},
        {"kind": "ObjectTrajectory", "weight": 1, "temporal_fraction": 0.3},
        {"kind": "AppendPoint", "weight": 1},
    ]},
    "sut": {"adapter": "embedded", "index": {"kind": "grid", "cell_size": 10.0, "time_bucket_ms": 5000}},
    "workload": {"workers": 3, "total_ops": 200, "warmup_ops": 20},
    "analysis": {"metrics": ["throughput", "latency_p50", "error_rate", "resource_usage"], "group_by": ["kind"]},
}


def write_config(tmp_path, drop=(), name="suite.yaml", **overrides):
    cfg = json.loads(json.dumps(BASE))
    for section in drop:
        cfg.pop(section)
    for dotted, value in overrides.items():
        section, key = dotted.split("__")
        cfg[section][key] = value
    path = tmp_path / name
    path.write_text(yaml.safe_dump(cfg, sort_keys=False))
    return path


def cli(capsys, *argv):
    code = main([str(a) for a in argv])
    out, err = capsys.readouterr()
    return code, out, err


def test_validate_ok(tmp_path, capsys):
    code, _, err = cli(capsys, "validate", "--config", write_config(tmp_path))
    assert code == 0 and "error" not in err


def test_validate_count_mismatch(tmp_path, capsys):
    code, _, err = cli(capsys, "validate", "--config", write_config(tmp_path, queries__count=150))
    assert code == 1
    assert "queries.count (150)" in err and "workload.total_ops (200)" in err


def test_validate_unknown_adapter_lists_registry(tmp_path, capsys):
    code, _, err = cli(capsys, "validate", "--config", write_config(tmp_path, sut__adapter="postgis"))
    assert code == 1 and "postgis" in err and "embedded" in err


def test_validate_reports_every_error(tmp_path, capsys):
    path = write_config(tmp_path, data__n_objects=0, workload__mode="bursty")
    code, _, err = cli(capsys, "validate", "--config", path)
    assert code == 1
    assert "data.n_objects" in err and "workload.mode" in err


def test_validate_warns_on_unknown_section(tmp_path, capsys):
    path = write_config(tmp_path)
    path.write_text(path.read_text() + "extras: {a: 1}\n")
    code, _, err = cli(capsys, "validate", "--config", path)
    assert code == 0 and "warning" in err and "extras" in err


def test_validate_yaml_syntax_error(tmp_path, capsys):
    path = tmp_path / "bad.yaml"
    path.write_text("data:\n  seed: 1\n  region: {min: [0, 0]\nqueries: {}\n")
    code, _, err = cli(capsys, "validate", "--config", path)
    assert code == 1 and "line 4, position 1" in err


def test_validate_missing_file(tmp_path, capsys):
    code, _, err = cli(capsys, "validate", "--config", tmp_path / "nope.yaml")
    assert code == 1 and "nope.yaml" in err


def test_generate_summary_and_overwrite(tmp_path, capsys):
    cfg, out = write_config(tmp_path), tmp_path / "d.csv"
    code, stdout, _ = cli(capsys, "generate", "--config", cfg, "--out", out)
    assert code == 0 and "points=200" in stdout and "objects=10" in stdout
    assert out.read_text().splitlines()[0] == "object_id,t,x,y"
    before = out.read_bytes()
    code, _, err = cli(capsys, "generate", "--config", cfg, "--out", out)
    assert code == 2 and "--force" in err and out.read_bytes() == before
    assert cli(capsys, "generate", "--config", cfg, "--out", out, "--force")[0] == 0
    assert out.read_bytes() == before


def test_run_and_analyze(tmp_path, capsys):
    cfg, data = write_config(tmp_path), tmp_path / "d.csv"
    cli(capsys, "generate", "--config", cfg, "--out", data)
    logs = []
    for i in range(2):
        log = tmp_path / f"run{i}.log"
        code, stdout, _ = cli(capsys, "run", "--config", cfg, "--dataset", data, "--out", log)
        assert code == 0 and "200 records" in stdout
        lines = log.read_text().splitlines()
        assert len(lines) == 201
        logs.append(json.loads(lines[0]))
    assert logs[0]["plan"] == logs[1]["plan"]
    assert logs[0]["run_id"] != logs[1]["run_id"]

    code, stdout, _ = cli(capsys, "analyze", "--config", cfg, "--out", tmp_path / "r.json", tmp_path / "run0.log")
    assert code == 0 and "kind=AppendPoint" in stdout
    report = json.loads((tmp_path / "r.json").read_text())
    assert report["type"] == "report" and len(report["groups"]) == 5

    code, _, _ = cli(capsys, "analyze", "--config", cfg, "--out", tmp_path / "c.csv",
                     tmp_path / "run0.log", tmp_path / "run1.log")
    assert code == 0
    assert (tmp_path / "c.csv").read_text().startswith("group,metric,unit,run_id,value,delta_pct")


def test_run_missing_dataset(tmp_path, capsys):
    out = tmp_path / "x.log"
    code, _, err = cli(capsys, "run", "--config", write_config(tmp_path), "--dataset", tmp_path / "none.csv",
                       "--out", out)
    assert code == 2 and "none.csv" in err and not out.exists()


def test_analyze_malformed_log(tmp_path, capsys):
    log = tmp_path / "bad.log"
    log.write_text('{"run_id": "x"}\n{"task_id": 1}\n')
    code, _, err = cli(capsys, "analyze", "--config", write_config(tmp_path), "--out", tmp_path / "r.json", log)
    assert code == 2 and "bad.log" in err and "line 2" in err


def test_analyze_needs_analysis_section(tmp_path, capsys):
    code, _, err = cli(capsys, "analyze", "--config", write_config(tmp_path, drop=("analysis",)),
                       "--out", tmp_path / "r.json", tmp_path / "whatever.log")
    assert code == 1 and "analysis" in err


def test_all_smoke_and_rerun(tmp_path, capsys):
    cfg, work = write_config(tmp_path), tmp_path / "work"
    code, stdout, _ = cli(capsys, "all", "--config", cfg, "--workdir", work)
    assert code == 0 and "report ->" in stdout
    assert (work / "dataset.csv").exists()
    assert len(list(work.glob("run-*.log"))) == 1 and len(list(work.glob("report-*.json"))) == 1
    code, _, err = cli(capsys, "all", "--config", cfg, "--workdir", work)
    assert code == 2 and "--force" in err
    assert cli(capsys, "all", "--config", cfg, "--workdir", work, "--force")[0] == 0
    assert len(list(work.glob("run-*.log"))) == 2


def test_all_without_analysis(tmp_path, capsys):
    cfg = write_config(tmp_path, drop=("analysis",))
    code, stdout, _ = cli(capsys, "all", "--config", cfg, "--workdir", tmp_path / "w")
    assert code == 0 and "notice" in stdout
    assert not list((tmp_path / "w").glob("report-*"))


def test_log_level_env(tmp_path):
    cfg = write_config(tmp_path)
    def go(level, sub):
        return subprocess.run([sys.executable, "-m", "stbench", "all", "--config", str(cfg),
                               "--workdir", str(tmp_path / sub)],
                              env={"STBENCH_LOG": level, "PATH": ""}, capture_output=True, text=True)
    quiet, loud = go("error", "q"), go("info", "l")
    assert quiet.returncode == loud.returncode == 0
    assert "Experiment" not in quiet.stderr
    for phase in ("Pre-Experiment", "In-Experiment", "Post-Experiment"):
        assert phase in loud.stderr


@pytest.mark.parametrize("config", sorted((Path(__file__).resolve().parents[1] / "configs").glob("*.yaml")),
                         ids=lambda p: p.name)
def test_shipped_configs_validate(config, capsys):
    code, _, err = cli(capsys, "validate", "--config", config)
    assert code == 0, err
