"""Core domain types: points, trajectories, extents and datasets.

Coordinates are abstract planar units; timestamps are integer milliseconds
since experiment epoch 0. Region and interval bounds are inclusive.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from decimal import Decimal
from typing import Iterable, Iterator, Sequence


def format_decimal(value: float | int) -> str:
    """Shortest round-trip decimal text without exponent; integral values drop ``.0``."""
    if isinstance(value, int) and not isinstance(value, bool):
        return str(value)
    text = format(Decimal(repr(float(value))), "f")
    if "." in text:
        text = text.rstrip("0").rstrip(".")
    if text == "-0":
        text = "0"
    return text


def _check_timestamp(t, name: str = "t") -> None:
    if isinstance(t, bool) or not isinstance(t, int):
        raise TypeError(f"{name} must be an integer number of milliseconds, got {t!r}")
    if t < 0:
        raise ValueError(f"{name} must be >= 0, got {t}")


@dataclass(frozen=True, slots=True)
class Point2D:
    x: float
    y: float

    def __post_init__(self):
        if not (math.isfinite(self.x) and math.isfinite(self.y)):
            raise ValueError(f"non-finite coordinate ({self.x}, {self.y})")


@dataclass(frozen=True, slots=True)
class TrajectoryPoint:
    object_id: int
    t: int
    pos: Point2D

    def __post_init__(self):
        if isinstance(self.object_id, bool) or not isinstance(self.object_id, int) or self.object_id < 0:
            raise ValueError(f"object_id must be a non-negative integer, got {self.object_id!r}")
        _check_timestamp(self.t)

    @property
    def x(self) -> float:
        return self.pos.x

    @property
    def y(self) -> float:
        return self.pos.y

    def key(self) -> tuple[int, int, float, float]:
        return (self.object_id, self.t, self.pos.x, self.pos.y)


@dataclass(frozen=True, slots=True)
class Region:
    min: Point2D
    max: Point2D

    def __post_init__(self):
        if self.min.x > self.max.x or self.min.y > self.max.y:
            raise ValueError(f"region min {self.min} exceeds max {self.max}")

    @classmethod
    def of(cls, xmin: float, ymin: float, xmax: float, ymax: float) -> Region:
        return cls(Point2D(xmin, ymin), Point2D(xmax, ymax))

    @property
    def width(self) -> float:
        return self.max.x - self.min.x

    @property
    def height(self) -> float:
        return self.max.y - self.min.y

    def contains(self, p: Point2D) -> bool:
        return self.min.x <= p.x <= self.max.x and self.min.y <= p.y <= self.max.y

    def intersects(self, other: Region) -> bool:
        return (self.min.x <= other.max.x and other.min.x <= self.max.x
                and self.min.y <= other.max.y and other.min.y <= self.max.y)


@dataclass(frozen=True, slots=True)
class TimeInterval:
    start: int
    end: int

    def __post_init__(self):
        _check_timestamp(self.start, "start")
        _check_timestamp(self.end, "end")
        if self.start > self.end:
            raise ValueError(f"interval start {self.start} > end {self.end}")

    @property
    def length(self) -> int:
        return self.end - self.start

    def contains(self, t: int) -> bool:
        return self.start <= t <= self.end

    def intersects(self, other: TimeInterval) -> bool:
        return self.start <= other.end and other.start <= self.end


@dataclass(frozen=True, slots=True)
class Trajectory:
    object_id: int
    points: tuple[TrajectoryPoint, ...]

    def __len__(self) -> int:
        return len(self.points)


def bounds(points: Iterable[TrajectoryPoint]) -> tuple[Region, TimeInterval]:
    """Tight bounding box and interval of a non-empty point collection."""
    it = iter(points)
    try:
        first = next(it)
    except StopIteration:
        raise ValueError("cannot bound an empty point set") from None
    xmin = xmax = first.pos.x
    ymin = ymax = first.pos.y
    tmin = tmax = first.t
    for p in it:
        x, y, t = p.pos.x, p.pos.y, p.t
        if x < xmin:
            xmin = x
        elif x > xmax:
            xmax = x
        if y < ymin:
            ymin = y
        elif y > ymax:
            ymax = y
        if t < tmin:
            tmin = t
        elif t > tmax:
            tmax = t
    return Region.of(xmin, ymin, xmax, ymax), TimeInterval(tmin, tmax)


@dataclass(frozen=True)
class Dataset:
    """Trajectories plus their stored extent and time span.

    The constructor does not enforce the dataset invariants so that broken
    datasets remain representable; use :func:`validate_dataset` to check and
    :meth:`from_trajectories` to build one with tight bounds.
    """

    trajectories: tuple[Trajectory, ...]
    extent: Region
    time_span: TimeInterval
    _by_id: dict = field(init=False, repr=False, compare=False, hash=False)

    def __post_init__(self):
        object.__setattr__(self, "trajectories", tuple(self.trajectories))
        object.__setattr__(self, "_by_id", {tr.object_id: tr for tr in self.trajectories})

    @classmethod
    def from_trajectories(cls, trajectories: Sequence[Trajectory]) -> Dataset:
        trajectories = tuple(trajectories)
        extent, span = bounds(p for tr in trajectories for p in tr.points)
        return cls(trajectories, extent, span)

    def points(self) -> Iterator[TrajectoryPoint]:
        for tr in self.trajectories:
            yield from tr.points

    @property
    def total_points(self) -> int:
        return sum(len(tr.points) for tr in self.trajectories)

    @property
    def object_ids(self) -> list[int]:
        return [tr.object_id for tr in self.trajectories]

    def trajectory(self, object_id: int) -> Trajectory:
        return self._by_id[object_id]


@dataclass(frozen=True, slots=True)
class DatasetSummary:
    object_count: int
    total_points: int
    mean_trajectory_length: float
    extent: Region
    time_span: TimeInterval


@dataclass(frozen=True, slots=True)
class Violation:
    code: str
    message: str
    object_id: int | None = None
    index: int | None = None

    def __str__(self) -> str:
        loc = []
        if self.object_id is not None:
            loc.append(f"object {self.object_id}")
        if self.index is not None:
            loc.append(f"point {self.index}")
        where = f" at {', '.join(loc)}" if loc else ""
        return f"{self.code}{where}: {self.message}"


def validate_dataset(d: Dataset) -> list[Violation]:
    """Return every invariant violation of ``d``; an empty list means valid."""
    violations: list[Violation] = []
    seen: set[int] = set()
    for tr in d.trajectories:
        oid = tr.object_id
        if oid in seen:
            violations.append(Violation("duplicate-object-id", f"object_id {oid} appears more than once", oid))
        seen.add(oid)
        if not tr.points:
            violations.append(Violation("empty-trajectory", "trajectory has no points", oid))
            continue
        prev_t = None
        for i, p in enumerate(tr.points):
            if p.object_id != oid:
                violations.append(Violation(
                    "object-id-mismatch", f"point carries object_id {p.object_id}", oid, i))
            if prev_t is not None and p.t <= prev_t:
                violations.append(Violation(
                    "non-increasing-timestamp", f"t={p.t} follows t={prev_t}", oid, i))
            prev_t = p.t
            if not d.extent.contains(p.pos):
                violations.append(Violation(
                    "stale-extent", f"point ({p.pos.x}, {p.pos.y}) lies outside stored extent", oid, i))
            if not d.time_span.contains(p.t):
                violations.append(Violation(
                    "stale-time-span", f"t={p.t} lies outside stored time span", oid, i))
    if not violations:
        if not d.trajectories:
            violations.append(Violation("empty-dataset", "dataset has no trajectories"))
        else:
            extent, span = bounds(d.points())
            if extent != d.extent:
                violations.append(Violation("stale-extent", f"stored extent {d.extent} is not tight (expected {extent})"))
            if span != d.time_span:
                violations.append(Violation("stale-time-span", f"stored time span {d.time_span} is not tight (expected {span})"))
    return violations


def summarize(d: Dataset) -> DatasetSummary:
    from .errors import DatasetValidationError

    violations = validate_dataset(d)
    if violations:
        raise DatasetValidationError(violations)
    n = len(d.trajectories)
    total = d.total_points
    return DatasetSummary(
        object_count=n,
        total_points=total,
        mean_trajectory_length=total / n,
        extent=d.extent,
        time_span=d.time_span,
    )
