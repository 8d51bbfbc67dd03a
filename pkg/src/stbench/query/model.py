"""Abstract, dialect-independent query model."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, fields, replace
from typing import Any, Mapping

from ..errors import ConfigError
from ..model import DatasetSummary, Point2D, Region, TimeInterval, TrajectoryPoint


class QueryKind(str, enum.Enum):
    SPATIAL_RANGE = "SpatialRange"
    TEMPORAL_RANGE = "TemporalRange"
    SPATIOTEMPORAL_RANGE = "SpatioTemporalRange"
    KNN = "KNearestNeighbors"
    OBJECT_TRAJECTORY = "ObjectTrajectory"
    APPEND_POINT = "AppendPoint"

    @property
    def is_write(self) -> bool:
        return self is QueryKind.APPEND_POINT

    @property
    def is_read(self) -> bool:
        return not self.is_write

    def __str__(self) -> str:
        return self.value

    @classmethod
    def parse(cls, name: str) -> QueryKind:
        try:
            return cls(name)
        except ValueError:
            valid = ", ".join(k.value for k in cls)
            raise ConfigError("kind", f"unknown query kind {name!r} (expected one of {valid})") from None


RANGE_KINDS = frozenset({QueryKind.SPATIAL_RANGE, QueryKind.TEMPORAL_RANGE, QueryKind.SPATIOTEMPORAL_RANGE})

# Template parameters each kind accepts beyond kind/weight.
TEMPLATE_PARAMS: dict[QueryKind, frozenset[str]] = {
    QueryKind.SPATIAL_RANGE: frozenset({"spatial_fraction", "anchored"}),
    QueryKind.TEMPORAL_RANGE: frozenset({"temporal_fraction", "anchored"}),
    QueryKind.SPATIOTEMPORAL_RANGE: frozenset({"spatial_fraction", "temporal_fraction", "anchored"}),
    QueryKind.KNN: frozenset({"k", "anchored"}),
    QueryKind.OBJECT_TRAJECTORY: frozenset({"temporal_fraction"}),
    QueryKind.APPEND_POINT: frozenset(),
}
_REQUIRED_TEMPLATE_PARAMS = {
    QueryKind.SPATIAL_RANGE: ("spatial_fraction",),
    QueryKind.TEMPORAL_RANGE: ("temporal_fraction",),
    QueryKind.SPATIOTEMPORAL_RANGE: ("spatial_fraction", "temporal_fraction"),
    QueryKind.KNN: ("k",),
    QueryKind.OBJECT_TRAJECTORY: ("temporal_fraction",),
    QueryKind.APPEND_POINT: (),
}


@dataclass(frozen=True)
class QueryTemplate:
    """A query shape plus its share of the mix.

    ``anchored`` centers windows on an existing data point; ``None`` means
    "not applicable" and is the only value allowed for parameters a kind
    does not use.
    """

    kind: QueryKind
    weight: float = 1.0
    spatial_fraction: float | None = None
    temporal_fraction: float | None = None
    k: int | None = None
    anchored: bool | None = None

    def __post_init__(self):
        if not isinstance(self.kind, QueryKind):
            object.__setattr__(self, "kind", QueryKind.parse(self.kind))
        if isinstance(self.weight, bool) or not isinstance(self.weight, (int, float)) \
                or not math.isfinite(self.weight) or self.weight < 0:
            raise ConfigError("weight", f"must be a non-negative finite number, got {self.weight!r}")
        allowed = TEMPLATE_PARAMS[self.kind]
        for name in ("spatial_fraction", "temporal_fraction", "k", "anchored"):
            value = getattr(self, name)
            if value is not None and name not in allowed:
                raise ConfigError(name, f"not applicable to {self.kind}")
        for name in _REQUIRED_TEMPLATE_PARAMS[self.kind]:
            if getattr(self, name) is None:
                raise ConfigError(name, f"required for {self.kind}")
        for name in ("spatial_fraction", "temporal_fraction"):
            v = getattr(self, name)
            if v is not None and (isinstance(v, bool) or not isinstance(v, (int, float)) or not 0 < v <= 1):
                raise ConfigError(name, f"must lie in (0, 1], got {v!r}")
        if self.k is not None and (isinstance(self.k, bool) or not isinstance(self.k, int) or self.k < 1):
            raise ConfigError("k", f"must be a positive integer, got {self.k!r}")
        if self.anchored is not None and not isinstance(self.anchored, bool):
            raise ConfigError("anchored", "must be a boolean")

    @property
    def is_anchored(self) -> bool:
        return bool(self.anchored)

    @classmethod
    def from_mapping(cls, data: Mapping[str, Any]) -> QueryTemplate:
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ConfigError(sorted(unknown)[0], "unknown template field")
        if "kind" not in data:
            raise ConfigError("kind", "is required")
        return cls(**data)


# Instance parameters each kind carries.
INSTANCE_PARAMS: dict[QueryKind, frozenset[str]] = {
    QueryKind.SPATIAL_RANGE: frozenset({"region"}),
    QueryKind.TEMPORAL_RANGE: frozenset({"interval"}),
    QueryKind.SPATIOTEMPORAL_RANGE: frozenset({"region", "interval"}),
    QueryKind.KNN: frozenset({"center", "at_time", "k", "time_tolerance_ms"}),
    QueryKind.OBJECT_TRAJECTORY: frozenset({"object_id", "interval"}),
    QueryKind.APPEND_POINT: frozenset({"new_point"}),
}
_OPTIONAL_INSTANCE_PARAMS = frozenset({"time_tolerance_ms"})
_PARAM_NAMES = ("region", "interval", "center", "at_time", "k", "time_tolerance_ms", "object_id", "new_point")


@dataclass(frozen=True)
class QueryInstance:
    """A concrete query. ``instance_id`` is ``None`` for parsed queries.

    k-NN candidates are points with ``|t - at_time| <= time_tolerance_ms``.
    """

    kind: QueryKind
    instance_id: int | None = None
    region: Region | None = None
    interval: TimeInterval | None = None
    center: Point2D | None = None
    at_time: int | None = None
    k: int | None = None
    time_tolerance_ms: int | None = None
    object_id: int | None = None
    new_point: TrajectoryPoint | None = None

    def __post_init__(self):
        if not isinstance(self.kind, QueryKind):
            object.__setattr__(self, "kind", QueryKind.parse(self.kind))
        wanted = INSTANCE_PARAMS[self.kind]
        for name in _PARAM_NAMES:
            present = getattr(self, name) is not None
            if name in wanted and not present and name not in _OPTIONAL_INSTANCE_PARAMS:
                raise ValueError(f"{self.kind} requires {name}")
            if present and name not in wanted:
                raise ValueError(f"{self.kind} does not take {name}")
        if self.kind is QueryKind.KNN:
            if self.time_tolerance_ms is None:
                object.__setattr__(self, "time_tolerance_ms", 0)
            if isinstance(self.k, bool) or not isinstance(self.k, int) or self.k < 1:
                raise ValueError(f"k must be a positive integer, got {self.k!r}")
            if not isinstance(self.at_time, int) or self.at_time < 0:
                raise ValueError(f"at_time must be a non-negative integer, got {self.at_time!r}")
            if not isinstance(self.time_tolerance_ms, int) or self.time_tolerance_ms < 0:
                raise ValueError("time_tolerance_ms must be a non-negative integer")
        if self.kind is QueryKind.OBJECT_TRAJECTORY and (not isinstance(self.object_id, int) or self.object_id < 0):
            raise ValueError(f"object_id must be a non-negative integer, got {self.object_id!r}")

    @property
    def knn_interval(self) -> TimeInterval:
        tol = self.time_tolerance_ms
        return TimeInterval(max(0, self.at_time - tol), self.at_time + tol)

    def without_id(self) -> QueryInstance:
        return replace(self, instance_id=None)


@dataclass(frozen=True)
class QueryText:
    dialect: str
    text: str

    def __post_init__(self):
        if not self.text:
            raise ValueError("query text must be non-empty")


def compatibility_problems(q: QueryInstance, summary: DatasetSummary) -> list[str]:
    """Dataset-relative invariants: region within 2x extent, interval touching the time span."""
    problems = []
    if q.region is not None:
        ext = summary.extent
        w, h = ext.width, ext.height
        outer = Region.of(ext.min.x - w / 2, ext.min.y - h / 2, ext.max.x + w / 2, ext.max.y + h / 2)
        if not (outer.contains(q.region.min) and outer.contains(q.region.max)):
            problems.append(f"region {q.region} exceeds twice the dataset extent")
        if not q.region.intersects(ext):
            problems.append(f"region {q.region} misses the dataset extent")
    if q.interval is not None and not q.interval.intersects(summary.time_span):
        problems.append(f"interval {q.interval} misses the dataset time span")
    return problems
