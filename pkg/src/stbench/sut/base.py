"""The system-under-test adapter contract and adapter registry."""

from __future__ import annotations

import abc
import math
from dataclasses import dataclass, fields
from typing import Any, Callable, Mapping

from ..errors import ConfigError, DuplicateNameError, UnknownNameError
from ..model import Dataset, TrajectoryPoint
from ..query.model import QueryInstance, QueryKind, QueryText


@dataclass(frozen=True)
class IndexSpec:
    kind: str = "none"
    cell_size: float | None = None
    time_bucket_ms: int | None = None

    def __post_init__(self):
        if self.kind not in ("none", "grid"):
            raise ConfigError("index.kind", f"must be 'none' or 'grid', got {self.kind!r}")
        if self.kind == "grid":
            cs, tb = self.cell_size, self.time_bucket_ms
            if isinstance(cs, bool) or not isinstance(cs, (int, float)) or not math.isfinite(cs) or cs <= 0:
                raise ConfigError("index.cell_size", f"must be a positive number, got {cs!r}")
            if isinstance(tb, bool) or not isinstance(tb, int) or tb <= 0:
                raise ConfigError("index.time_bucket_ms", f"must be a positive integer, got {tb!r}")
        elif self.cell_size is not None or self.time_bucket_ms is not None:
            raise ConfigError("index", "grid parameters given for index kind 'none'")

    @classmethod
    def from_mapping(cls, data: Mapping[str, Any] | None) -> IndexSpec:
        if not data:
            return cls()
        unknown = set(data) - {"kind", "cell_size", "time_bucket_ms"}
        if unknown:
            raise ConfigError(f"index.{sorted(unknown)[0]}", "unknown field")
        return cls(**data)


@dataclass(frozen=True)
class QueryResult:
    """Rows for reads (a set, so deduplicated); ``accepted`` for writes."""

    kind: QueryKind
    rows: frozenset[TrajectoryPoint] | None = None
    accepted: bool | None = None
    row_count: int | None = None

    def __post_init__(self):
        if self.kind.is_write:
            if self.rows:
                raise ValueError("write results carry no rows")
            object.__setattr__(self, "rows", None)
            if self.row_count is None:
                object.__setattr__(self, "row_count", 0)
        else:
            if self.rows is not None:
                object.__setattr__(self, "rows", frozenset(self.rows))
                object.__setattr__(self, "row_count", len(self.rows))


@dataclass(frozen=True)
class ResourceSample:
    """Logical resource counters. ``None`` means the adapter cannot report the field."""

    rows_scanned: int | None = None
    cells_visited: int | None = None
    points_stored: int | None = None
    bytes_estimated: int | None = None

    COUNTERS = ("rows_scanned", "cells_visited")

    def to_dict(self) -> dict[str, int | None]:
        return {f.name: getattr(self, f.name) for f in fields(self)}

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> ResourceSample:
        return cls(**{f.name: data.get(f.name) for f in fields(cls)})

    def delta(self, earlier: ResourceSample) -> dict[str, int | None]:
        out = {}
        for f in fields(self):
            a, b = getattr(earlier, f.name), getattr(self, f.name)
            out[f.name] = None if a is None or b is None else b - a
        return out


class SutAdapter(abc.ABC):
    """What the suite needs from a system under test.

    Lifecycle: ``prepare`` -> ``bulk_load`` -> ``build_index`` -> ``execute``*
    -> ``teardown``. ``execute`` must tolerate concurrent calls.
    ``dialect`` names the query language ``execute`` accepts as QueryText.
    """

    name: str = "adapter"
    dialect: str = "neutral"

    @abc.abstractmethod
    def prepare(self) -> None: ...

    @abc.abstractmethod
    def bulk_load(self, dataset: Dataset) -> None: ...

    @abc.abstractmethod
    def build_index(self, spec: IndexSpec | None = None) -> None: ...

    @abc.abstractmethod
    def execute(self, query: QueryText | QueryInstance) -> QueryResult: ...

    @abc.abstractmethod
    def resource_snapshot(self) -> ResourceSample: ...

    @abc.abstractmethod
    def teardown(self) -> None: ...


AdapterFactory = Callable[[Mapping[str, Any]], SutAdapter]
_ADAPTERS: dict[str, AdapterFactory] = {}


def register_adapter(name: str, factory: AdapterFactory, *, replace: bool = False) -> None:
    if name in _ADAPTERS and not replace:
        raise DuplicateNameError(f"adapter {name!r} is already registered")
    _ADAPTERS[name] = factory


def unregister_adapter(name: str) -> None:
    _ADAPTERS.pop(name, None)


def registered_adapters() -> list[str]:
    return sorted(_ADAPTERS)


def adapter_for(name: str, config: Mapping[str, Any] | None = None) -> SutAdapter:
    try:
        factory = _ADAPTERS[name]
    except KeyError:
        known = ", ".join(registered_adapters()) or "none"
        raise UnknownNameError(f"unknown adapter {name!r} (registered: {known})") from None
    return factory(dict(config or {}))
