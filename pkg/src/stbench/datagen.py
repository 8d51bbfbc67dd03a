"""Seeded random-waypoint generator and the dataset interchange format."""

from __future__ import annotations

import io
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Any, BinaryIO, Mapping

from .errors import ConfigError, DatasetValidationError, ParseError
from .model import (
    Dataset,
    Point2D,
    Region,
    Trajectory,
    TrajectoryPoint,
    Violation,
    format_decimal,
    validate_dataset,
)
from .rng import MASK64, SplitMix64

HEADER = "object_id,t,x,y"


@dataclass(frozen=True)
class DataGenConfig:
    seed: int
    n_objects: int
    points_per_object: int | tuple[int, int]
    region: Region
    speed_min: float
    speed_max: float
    sample_interval_ms: int

    def __post_init__(self):
        self.validate()

    def validate(self) -> None:
        if not _is_int(self.seed) or not 0 <= self.seed <= MASK64:
            raise ConfigError("seed", "must be a 64-bit unsigned integer")
        if not _is_int(self.n_objects) or self.n_objects < 1:
            raise ConfigError("n_objects", "must be a positive integer")
        ppo = self.points_per_object
        if isinstance(ppo, tuple):
            if len(ppo) != 2 or not all(_is_int(v) for v in ppo):
                raise ConfigError("points_per_object", "range must be a pair of integers (min, max)")
            if ppo[0] < 1 or ppo[0] > ppo[1]:
                raise ConfigError("points_per_object", "range must satisfy 1 <= min <= max")
        elif not _is_int(ppo) or ppo < 1:
            raise ConfigError("points_per_object", "must be a positive integer or a (min, max) pair")
        if not isinstance(self.region, Region):
            raise ConfigError("region", "must be a Region")
        if self.region.width <= 0 or self.region.height <= 0:
            raise ConfigError("region", "must have positive area")
        for name in ("speed_min", "speed_max"):
            v = getattr(self, name)
            if not isinstance(v, (int, float)) or isinstance(v, bool) or not math.isfinite(v):
                raise ConfigError(name, "must be a finite number")
        if not self.speed_min > 0:
            raise ConfigError("speed_min", "must be > 0")
        if self.speed_min > self.speed_max:
            raise ConfigError("speed_max", "must be >= speed_min")
        if not _is_int(self.sample_interval_ms) or self.sample_interval_ms < 1:
            raise ConfigError("sample_interval_ms", "must be a positive integer")

    @classmethod
    def from_mapping(cls, data: Mapping[str, Any]) -> DataGenConfig:
        """Build from the ``data`` section of a suite config."""
        required = ("seed", "n_objects", "points_per_object", "region",
                    "speed_min", "speed_max", "sample_interval_ms")
        for key in required:
            if key not in data:
                raise ConfigError(key, "is required")
        ppo = data["points_per_object"]
        if isinstance(ppo, (list, tuple)):
            ppo = tuple(ppo)
        reg = data["region"]
        try:
            region = Region(Point2D(*map(float, reg["min"])), Point2D(*map(float, reg["max"])))
        except (KeyError, TypeError, ValueError) as exc:
            raise ConfigError("region", f"expected {{min: [x, y], max: [x, y]}} ({exc})") from None
        return cls(
            seed=data["seed"],
            n_objects=data["n_objects"],
            points_per_object=ppo,
            region=region,
            speed_min=data["speed_min"],
            speed_max=data["speed_max"],
            sample_interval_ms=data["sample_interval_ms"],
        )


def _is_int(v) -> bool:
    return isinstance(v, int) and not isinstance(v, bool)


def _clamp(v: float, lo: float, hi: float) -> float:
    return lo if v < lo else hi if v > hi else v


def generate_trajectory(cfg: DataGenConfig, object_id: int) -> Trajectory:
    """Random-waypoint trajectory for one object, drawn from its own substream."""
    rng = SplitMix64.substream(cfg.seed, object_id)
    ppo = cfg.points_per_object
    n = rng.randint(*ppo) if isinstance(ppo, tuple) else ppo
    reg = cfg.region
    xlo, ylo, xhi, yhi = reg.min.x, reg.min.y, reg.max.x, reg.max.y
    dt = cfg.sample_interval_ms / 1000.0

    x = rng.uniform(xlo, xhi)
    y = rng.uniform(ylo, yhi)
    points = [TrajectoryPoint(object_id, 0, Point2D(x, y))]
    waypoint = None
    step = 0.0
    for i in range(1, n):
        while True:
            if waypoint is None:
                waypoint = (rng.uniform(xlo, xhi), rng.uniform(ylo, yhi))
                step = rng.uniform(cfg.speed_min, cfg.speed_max) * dt
            dx = waypoint[0] - x
            dy = waypoint[1] - y
            dist = math.sqrt(dx * dx + dy * dy)
            if dist > 0.0:
                break
            waypoint = None
        if dist <= step:
            x, y = waypoint
            waypoint = None
        else:
            f = step / dist
            x = _clamp(x + dx * f, xlo, xhi)
            y = _clamp(y + dy * f, ylo, yhi)
        points.append(TrajectoryPoint(object_id, i * cfg.sample_interval_ms, Point2D(x, y)))
    return Trajectory(object_id, tuple(points))


def generate_dataset(cfg: DataGenConfig, threads: int = 1) -> Dataset:
    """Generate ``cfg.n_objects`` trajectories with ids ``0..n-1``.

    The result depends only on ``cfg``; ``threads`` changes scheduling, never output.
    """
    cfg.validate()
    ids = range(cfg.n_objects)
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            trajectories = list(pool.map(lambda oid: generate_trajectory(cfg, oid), ids))
    else:
        trajectories = [generate_trajectory(cfg, oid) for oid in ids]
    return Dataset.from_trajectories(trajectories)


def export_dataset(d: Dataset, sink: BinaryIO) -> int:
    """Write ``d`` in the ``object_id,t,x,y`` interchange format; returns bytes written."""
    violations = validate_dataset(d)
    if violations:
        raise DatasetValidationError(violations)
    buf = io.StringIO()
    buf.write(HEADER + "\n")
    for tr in sorted(d.trajectories, key=lambda tr: tr.object_id):
        for p in tr.points:
            buf.write(f"{p.object_id},{p.t},{format_decimal(p.pos.x)},{format_decimal(p.pos.y)}\n")
    data = buf.getvalue().encode("ascii")
    sink.write(data)
    return len(data)


def dataset_bytes(d: Dataset) -> bytes:
    buf = io.BytesIO()
    export_dataset(d, buf)
    return buf.getvalue()


def _parse_int(text: str, name: str, lineno: int) -> int:
    if not text.isdigit():
        raise ParseError(f"{name} {text!r} is not a non-negative integer", line=lineno)
    return int(text)


def _parse_float(text: str, name: str, lineno: int) -> float:
    try:
        v = float(text)
    except ValueError:
        raise ParseError(f"{name} {text!r} is not a decimal number", line=lineno) from None
    if not math.isfinite(v):
        raise ParseError(f"{name} {text!r} is not finite", line=lineno)
    return v


def import_dataset(source: BinaryIO) -> Dataset:
    """Parse the interchange format; extent and time span are recomputed."""
    raw = source.read()
    text = raw.decode("utf-8") if isinstance(raw, (bytes, bytearray)) else raw
    lines = text.splitlines()
    if not lines or lines[0].strip() != HEADER:
        raise ParseError(f"expected header {HEADER!r}", line=1)
    trajectories: list[Trajectory] = []
    current: list[TrajectoryPoint] = []
    prev: tuple[int, int] | None = None
    for lineno, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        fields = line.strip().split(",")
        if len(fields) != 4:
            raise ParseError(f"expected 4 fields, found {len(fields)}", line=lineno)
        oid = _parse_int(fields[0], "object_id", lineno)
        t = _parse_int(fields[1], "t", lineno)
        x = _parse_float(fields[2], "x", lineno)
        y = _parse_float(fields[3], "y", lineno)
        if prev is not None and (oid, t) <= prev:
            raise DatasetValidationError([Violation(
                "sort-order",
                f"line {lineno}: ({oid}, {t}) does not follow ({prev[0]}, {prev[1]}); "
                "records must be sorted by (object_id, t)",
                oid,
            )])
        if prev is not None and oid != prev[0]:
            trajectories.append(Trajectory(prev[0], tuple(current)))
            current = []
        current.append(TrajectoryPoint(oid, t, Point2D(x, y)))
        prev = (oid, t)
    if prev is None:
        raise ParseError("dataset contains no points", line=len(lines))
    trajectories.append(Trajectory(prev[0], tuple(current)))
    return Dataset.from_trajectories(trajectories)
