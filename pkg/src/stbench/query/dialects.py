"""Dialect registry plus the two built-in dialects: ``neutral`` and ``generic-sql``.

Neutral grammar, one query per line::

    RANGE SPACE <xmin> <ymin> <xmax> <ymax>
    RANGE TIME <tstart> <tend>
    RANGE ST <xmin> <ymin> <xmax> <ymax> <tstart> <tend>
    KNN <x> <y> <t> <k> [<tolerance_ms>]
    TRAJ <object_id> <tstart> <tend>
    APPEND <object_id> <t> <x> <y>

The k-NN tolerance token is emitted only when non-zero.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Callable, Iterable

from ..errors import DuplicateNameError, ParseError, UnknownNameError, UnsupportedKindError
from ..model import Point2D, Region, TimeInterval, TrajectoryPoint, format_decimal as num
from .model import QueryInstance, QueryKind, QueryText

Emitter = Callable[[QueryInstance], str]


@dataclass(frozen=True)
class Dialect:
    name: str
    emitter: Emitter
    kinds: frozenset[QueryKind] = frozenset(QueryKind)

    def supports(self, kind: QueryKind) -> bool:
        return kind in self.kinds


class DialectRegistry:
    """Name -> Dialect map. Built once at startup, read-only afterwards."""

    def __init__(self, dialects: Iterable[Dialect] = ()):
        self._dialects: dict[str, Dialect] = {}
        for d in dialects:
            self.register(d)

    def register(self, dialect: Dialect) -> DialectRegistry:
        if dialect.name in self._dialects:
            raise DuplicateNameError(f"dialect {dialect.name!r} is already registered")
        self._dialects[dialect.name] = dialect
        return self

    def get(self, name: str) -> Dialect:
        try:
            return self._dialects[name]
        except KeyError:
            known = ", ".join(sorted(self._dialects)) or "none"
            raise UnknownNameError(f"unknown dialect {name!r} (registered: {known})") from None

    def __contains__(self, name: str) -> bool:
        return name in self._dialects

    def names(self) -> list[str]:
        return sorted(self._dialects)


def register_dialect(registry: DialectRegistry, dialect: Dialect) -> DialectRegistry:
    return registry.register(dialect)


def translate(instance: QueryInstance, dialect_name: str, registry: DialectRegistry | None = None) -> QueryText:
    dialect = (registry or default_registry()).get(dialect_name)
    if not dialect.supports(instance.kind):
        raise UnsupportedKindError(f"dialect {dialect_name!r} does not support {instance.kind}")
    return QueryText(dialect_name, dialect.emitter(instance))


# -- neutral ---------------------------------------------------------------

def _bbox(r: Region) -> str:
    return f"{num(r.min.x)} {num(r.min.y)} {num(r.max.x)} {num(r.max.y)}"


def emit_neutral(q: QueryInstance) -> str:
    k = q.kind
    if k is QueryKind.SPATIAL_RANGE:
        return f"RANGE SPACE {_bbox(q.region)}"
    if k is QueryKind.TEMPORAL_RANGE:
        return f"RANGE TIME {q.interval.start} {q.interval.end}"
    if k is QueryKind.SPATIOTEMPORAL_RANGE:
        return f"RANGE ST {_bbox(q.region)} {q.interval.start} {q.interval.end}"
    if k is QueryKind.KNN:
        text = f"KNN {num(q.center.x)} {num(q.center.y)} {q.at_time} {q.k}"
        return f"{text} {q.time_tolerance_ms}" if q.time_tolerance_ms else text
    if k is QueryKind.OBJECT_TRAJECTORY:
        return f"TRAJ {q.object_id} {q.interval.start} {q.interval.end}"
    if k is QueryKind.APPEND_POINT:
        p = q.new_point
        return f"APPEND {p.object_id} {p.t} {num(p.pos.x)} {num(p.pos.y)}"
    raise UnsupportedKindError(f"dialect 'neutral' does not support {k}")


_TOKEN = re.compile(r"\S+")
_DECIMAL = re.compile(r"-?(?:\d+(?:\.\d*)?|\.\d+)")
_UINT = re.compile(r"\d+")


class _Tokens:
    def __init__(self, text: str):
        self.text = text
        self.items = [(m.group(), m.start() + 1) for m in _TOKEN.finditer(text)]
        self.i = 0

    def pos(self) -> int:
        return self.items[self.i][1] if self.i < len(self.items) else len(self.text) + 1

    def error(self, msg: str, position: int | None = None) -> ParseError:
        return ParseError(msg, position=self.pos() if position is None else position)

    def word(self, *expected: str) -> str:
        if self.i >= len(self.items):
            raise self.error(f"expected one of {', '.join(expected)}, found end of input")
        tok, _ = self.items[self.i]
        if tok not in expected:
            raise self.error(f"expected one of {', '.join(expected)}, found {tok!r}")
        self.i += 1
        return tok

    def _match(self, pattern: re.Pattern, what: str) -> tuple[str, int]:
        if self.i >= len(self.items):
            raise self.error(f"expected {what}, found end of input")
        tok, at = self.items[self.i]
        if not pattern.fullmatch(tok):
            raise self.error(f"expected {what}, found {tok!r}")
        self.i += 1
        return tok, at

    def decimal(self) -> float:
        return float(self._match(_DECIMAL, "decimal literal")[0])

    def uint(self) -> int:
        return int(self._match(_UINT, "non-negative integer")[0])

    def more(self) -> bool:
        return self.i < len(self.items)

    def end(self) -> None:
        if self.more():
            raise self.error(f"unexpected trailing token {self.items[self.i][0]!r}")


def _parse_region(tk: _Tokens) -> Region:
    at = tk.pos()
    xmin, ymin, xmax, ymax = tk.decimal(), tk.decimal(), tk.decimal(), tk.decimal()
    if xmin > xmax or ymin > ymax:
        raise tk.error(f"region min ({num(xmin)}, {num(ymin)}) exceeds max ({num(xmax)}, {num(ymax)})", at)
    return Region.of(xmin, ymin, xmax, ymax)


def _parse_interval(tk: _Tokens) -> TimeInterval:
    at = tk.pos()
    start, end = tk.uint(), tk.uint()
    if start > end:
        raise tk.error(f"interval start {start} exceeds end {end}", at)
    return TimeInterval(start, end)


def parse_neutral(text: str) -> QueryInstance:
    """Parse one neutral-dialect query; the result has no ``instance_id``."""
    tk = _Tokens(text)
    head = tk.word("RANGE", "KNN", "TRAJ", "APPEND")
    if head == "RANGE":
        sub = tk.word("SPACE", "TIME", "ST")
        if sub == "SPACE":
            q = QueryInstance(QueryKind.SPATIAL_RANGE, region=_parse_region(tk))
        elif sub == "TIME":
            q = QueryInstance(QueryKind.TEMPORAL_RANGE, interval=_parse_interval(tk))
        else:
            region = _parse_region(tk)
            q = QueryInstance(QueryKind.SPATIOTEMPORAL_RANGE, region=region, interval=_parse_interval(tk))
    elif head == "KNN":
        x, y = tk.decimal(), tk.decimal()
        t = tk.uint()
        at = tk.pos()
        k = tk.uint()
        if k < 1:
            raise tk.error("k must be positive", at)
        tol = tk.uint() if tk.more() else 0
        q = QueryInstance(QueryKind.KNN, center=Point2D(x, y), at_time=t, k=k, time_tolerance_ms=tol)
    elif head == "TRAJ":
        oid = tk.uint()
        q = QueryInstance(QueryKind.OBJECT_TRAJECTORY, object_id=oid, interval=_parse_interval(tk))
    else:
        oid, t = tk.uint(), tk.uint()
        x, y = tk.decimal(), tk.decimal()
        q = QueryInstance(QueryKind.APPEND_POINT, new_point=TrajectoryPoint(oid, t, Point2D(x, y)))
    tk.end()
    return q


# -- generic-sql -----------------------------------------------------------

_SELECT = "SELECT object_id, t, x, y FROM points WHERE"


def _lit(v: float) -> str:
    s = num(v)
    return f"({s})" if s.startswith("-") else s


def _space_clause(r: Region) -> str:
    return (f"x BETWEEN {_lit(r.min.x)} AND {_lit(r.max.x)} "
            f"AND y BETWEEN {_lit(r.min.y)} AND {_lit(r.max.y)}")


def _time_clause(i: TimeInterval) -> str:
    return f"t BETWEEN {i.start} AND {i.end}"


def emit_generic_sql(q: QueryInstance) -> str:
    """SQL over a single table ``points(object_id, t, x, y)`` with literal parameters."""
    k = q.kind
    if k is QueryKind.SPATIAL_RANGE:
        return f"{_SELECT} {_space_clause(q.region)};"
    if k is QueryKind.TEMPORAL_RANGE:
        return f"{_SELECT} {_time_clause(q.interval)};"
    if k is QueryKind.SPATIOTEMPORAL_RANGE:
        return f"{_SELECT} {_space_clause(q.region)} AND {_time_clause(q.interval)};"
    if k is QueryKind.KNN:
        cx, cy = _lit(q.center.x), _lit(q.center.y)
        return (f"{_SELECT} {_time_clause(q.knn_interval)} "
                f"ORDER BY ((x-{cx})^2 + (y-{cy})^2), object_id, t LIMIT {q.k};")
    if k is QueryKind.OBJECT_TRAJECTORY:
        return f"{_SELECT} object_id = {q.object_id} AND {_time_clause(q.interval)} ORDER BY t;"
    if k is QueryKind.APPEND_POINT:
        p = q.new_point
        return f"INSERT INTO points (object_id, t, x, y) VALUES ({p.object_id}, {p.t}, {num(p.pos.x)}, {num(p.pos.y)});"
    raise UnsupportedKindError(f"dialect 'generic-sql' does not support {k}")


NEUTRAL = Dialect("neutral", emit_neutral)
GENERIC_SQL = Dialect("generic-sql", emit_generic_sql)


def default_registry() -> DialectRegistry:
    """A fresh registry holding the built-in dialects."""
    return DialectRegistry([NEUTRAL, GENERIC_SQL])
