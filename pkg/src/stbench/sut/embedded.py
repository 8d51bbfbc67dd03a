"""In-process reference store with an optional uniform space-time grid index.

Reads run lock-free against an immutable snapshot. Appends go through a
single-writer lock and publish a new snapshot; a read that starts after an
append completes sees it.
"""

from __future__ import annotations

import math
import threading
from bisect import bisect_left, bisect_right
from dataclasses import dataclass
from typing import Any, Iterator, Mapping

from ..errors import QueryError, SutStateError
from ..model import Dataset, Trajectory, TrajectoryPoint
from ..query.dialects import parse_neutral
from ..query.model import QueryInstance, QueryKind, QueryText
from .base import IndexSpec, QueryResult, ResourceSample, SutAdapter, register_adapter
from .oracle import evaluate_points, knn_key

CellKey = tuple[int, int, int]

# Rough per-row and per-cell footprints for bytes_estimated.
_ROW_BYTES = 32
_CELL_BYTES = 64


@dataclass(frozen=True)
class _Grid:
    cell_size: float
    time_bucket_ms: int
    cells: dict[CellKey, tuple[TrajectoryPoint, ...]]
    lo: CellKey
    hi: CellKey

    def key(self, p: TrajectoryPoint) -> CellKey:
        cs = self.cell_size
        return (math.floor(p.pos.x / cs), math.floor(p.pos.y / cs), p.t // self.time_bucket_ms)

    @classmethod
    def build(cls, spec: IndexSpec, points: Iterator[TrajectoryPoint]) -> _Grid:
        g = cls(spec.cell_size, spec.time_bucket_ms, {}, (0, 0, 0), (-1, -1, -1))
        buckets: dict[CellKey, list[TrajectoryPoint]] = {}
        for p in points:
            buckets.setdefault(g.key(p), []).append(p)
        return g._with_cells({k: tuple(v) for k, v in buckets.items()})

    def _with_cells(self, cells: dict[CellKey, tuple[TrajectoryPoint, ...]]) -> _Grid:
        if cells:
            keys = list(cells)
            lo = tuple(min(k[i] for k in keys) for i in range(3))
            hi = tuple(max(k[i] for k in keys) for i in range(3))
        else:
            lo, hi = (0, 0, 0), (-1, -1, -1)
        return _Grid(self.cell_size, self.time_bucket_ms, cells, lo, hi)

    def with_point(self, p: TrajectoryPoint) -> _Grid:
        k = self.key(p)
        cells = dict(self.cells)
        cells[k] = cells.get(k, ()) + (p,)
        if len(self.cells) == 0:
            return self._with_cells(cells)
        lo = tuple(min(a, b) for a, b in zip(self.lo, k))
        hi = tuple(max(a, b) for a, b in zip(self.hi, k))
        return _Grid(self.cell_size, self.time_bucket_ms, cells, lo, hi)

    def bucket_range(self, q: QueryInstance) -> tuple[int, int]:
        interval = q.knn_interval if q.kind is QueryKind.KNN else q.interval
        if interval is None:
            return self.lo[2], self.hi[2]
        tb = self.time_bucket_ms
        return max(self.lo[2], interval.start // tb), min(self.hi[2], interval.end // tb)

    def cells_in(self, xr: tuple[int, int], yr: tuple[int, int], tr: tuple[int, int]):
        """Non-empty cells whose key lies in the given inclusive key ranges."""
        xr = (max(xr[0], self.lo[0]), min(xr[1], self.hi[0]))
        yr = (max(yr[0], self.lo[1]), min(yr[1], self.hi[1]))
        spans = [r[1] - r[0] + 1 for r in (xr, yr, tr)]
        if min(spans) <= 0:
            return []
        if spans[0] * spans[1] * spans[2] <= len(self.cells):
            out = []
            for cx in range(xr[0], xr[1] + 1):
                for cy in range(yr[0], yr[1] + 1):
                    for ct in range(tr[0], tr[1] + 1):
                        pts = self.cells.get((cx, cy, ct))
                        if pts is not None:
                            out.append(pts)
            return out
        return [pts for (cx, cy, ct), pts in self.cells.items()
                if xr[0] <= cx <= xr[1] and yr[0] <= cy <= yr[1] and tr[0] <= ct <= tr[1]]


@dataclass(frozen=True)
class _Snapshot:
    objects: dict[int, tuple[TrajectoryPoint, ...]]
    times: dict[int, tuple[int, ...]]
    n_points: int
    grid: _Grid | None

    def points(self) -> Iterator[TrajectoryPoint]:
        for pts in self.objects.values():
            yield from pts


class EmbeddedStore:
    """Thread-safe store answering reads exactly, optionally through a grid."""

    def __init__(self, dataset: Dataset | None = None):
        self._write_lock = threading.Lock()
        self._counter_lock = threading.Lock()
        self._rows_scanned = 0
        self._cells_visited = 0
        self._snap = _Snapshot({}, {}, 0, None)
        if dataset is not None:
            self.load(dataset)

    # -- setup -------------------------------------------------------------

    def load(self, dataset: Dataset) -> None:
        objects = {tr.object_id: tuple(tr.points) for tr in dataset.trajectories}
        times = {oid: tuple(p.t for p in pts) for oid, pts in objects.items()}
        with self._write_lock:
            self._snap = _Snapshot(objects, times, sum(map(len, objects.values())), None)

    def build_index(self, spec: IndexSpec) -> EmbeddedStore:
        with self._write_lock:
            snap = self._snap
            grid = _Grid.build(spec, snap.points()) if spec.kind == "grid" else None
            self._snap = _Snapshot(snap.objects, snap.times, snap.n_points, grid)
        return self

    @property
    def indexed(self) -> bool:
        return self._snap.grid is not None

    def to_dataset(self) -> Dataset:
        snap = self._snap
        return Dataset.from_trajectories([Trajectory(oid, pts) for oid, pts in sorted(snap.objects.items())])

    # -- accounting --------------------------------------------------------

    def _account(self, rows: int, cells: int) -> None:
        with self._counter_lock:
            self._rows_scanned += rows
            self._cells_visited += cells

    def resource_snapshot(self) -> ResourceSample:
        snap = self._snap
        with self._counter_lock:
            rows, cells = self._rows_scanned, self._cells_visited
        n_cells = len(snap.grid.cells) if snap.grid is not None else 0
        return ResourceSample(rows, cells, snap.n_points, snap.n_points * _ROW_BYTES + n_cells * _CELL_BYTES)

    # -- execution ---------------------------------------------------------

    def execute(self, q: QueryInstance) -> QueryResult:
        if not isinstance(q, QueryInstance):
            raise QueryError(f"expected a QueryInstance, got {type(q).__name__}")
        if q.kind is QueryKind.APPEND_POINT:
            accepted = self._append(q.new_point)
            return QueryResult(q.kind, accepted=accepted, row_count=int(accepted))
        snap = self._snap
        if q.kind is QueryKind.OBJECT_TRAJECTORY:
            return QueryResult(q.kind, rows=self._trajectory(snap, q))
        if snap.grid is None:
            self._account(snap.n_points, 0)
            return QueryResult(q.kind, rows=evaluate_points(q, snap.points()))
        if q.kind is QueryKind.KNN:
            return QueryResult(q.kind, rows=self._grid_knn(snap.grid, q))
        return QueryResult(q.kind, rows=self._grid_range(snap.grid, q))

    def _trajectory(self, snap: _Snapshot, q: QueryInstance) -> frozenset[TrajectoryPoint]:
        pts = snap.objects.get(q.object_id)
        if pts is None:
            return frozenset()
        ts = snap.times[q.object_id]
        lo = bisect_left(ts, q.interval.start)
        hi = bisect_right(ts, q.interval.end)
        self._account(hi - lo, 0)
        return frozenset(pts[lo:hi])

    def _grid_range(self, g: _Grid, q: QueryInstance) -> frozenset[TrajectoryPoint]:
        if q.region is not None:
            cs = g.cell_size
            r = q.region
            xr = (math.floor(r.min.x / cs), math.floor(r.max.x / cs))
            yr = (math.floor(r.min.y / cs), math.floor(r.max.y / cs))
        else:
            xr, yr = (g.lo[0], g.hi[0]), (g.lo[1], g.hi[1])
        cells = g.cells_in(xr, yr, g.bucket_range(q))
        rows = 0
        out = []
        for pts in cells:
            rows += len(pts)
            out.extend(p for p in pts if _in_window(q, p))
        self._account(rows, len(cells))
        return frozenset(out)

    def _grid_knn(self, g: _Grid, q: QueryInstance) -> frozenset[TrajectoryPoint]:
        cs = g.cell_size
        cx, cy = q.center.x, q.center.y
        kx, ky = math.floor(cx / cs), math.floor(cy / cs)
        tr = g.bucket_range(q)
        if tr[0] > tr[1]:
            return frozenset()
        window = q.knn_interval
        # rings beyond this radius hold no cells at all
        max_ring = max(kx - g.lo[0], g.hi[0] - kx, ky - g.lo[1], g.hi[1] - ky, 0)
        margin = 1e-9 * (abs(cx) + abs(cy) + cs)
        best: list[tuple[tuple[float, int, int], TrajectoryPoint]] = []
        rows = cells = 0
        r = 0
        while r <= max_ring:
            ring_cells = (8 * r if r else 1) * max(tr[1] - tr[0] + 1, 0)
            if ring_cells > len(g.cells):
                # ring enumeration would cost more than scanning what is left
                for (ex, ey, et), pts in g.cells.items():
                    if max(abs(ex - kx), abs(ey - ky)) >= r and tr[0] <= et <= tr[1]:
                        cells += 1
                        rows += len(pts)
                        best.extend((knn_key(q, p), p) for p in pts if window.contains(p.t))
                break
            for ex, ey in _ring(kx, ky, r):
                for et in range(tr[0], tr[1] + 1):
                    pts = g.cells.get((ex, ey, et))
                    if pts is None:
                        continue
                    cells += 1
                    rows += len(pts)
                    best.extend((knn_key(q, p), p) for p in pts if window.contains(p.t))
            if len(best) >= q.k:
                best.sort(key=lambda e: e[0])
                del best[q.k:]
                reach = min(cx - (kx - r) * cs, (kx + r + 1) * cs - cx,
                            cy - (ky - r) * cs, (ky + r + 1) * cs - cy) - margin
                if reach > 0 and best[-1][0][0] < reach * reach:
                    break
            r += 1
        self._account(rows, cells)
        best.sort(key=lambda e: e[0])
        return frozenset(p for _, p in best[: q.k])

    def _append(self, p: TrajectoryPoint) -> bool:
        with self._write_lock:
            snap = self._snap
            pts = snap.objects.get(p.object_id, ())
            if pts and p.t <= pts[-1].t:
                return False
            objects = dict(snap.objects)
            times = dict(snap.times)
            objects[p.object_id] = pts + (p,)
            times[p.object_id] = snap.times.get(p.object_id, ()) + (p.t,)
            grid = snap.grid.with_point(p) if snap.grid is not None else None
            self._snap = _Snapshot(objects, times, snap.n_points + 1, grid)
        self._account(1, 0)
        return True


def _in_window(q: QueryInstance, p: TrajectoryPoint) -> bool:
    if q.region is not None and not q.region.contains(p.pos):
        return False
    return q.interval is None or q.interval.contains(p.t)


def _ring(kx: int, ky: int, r: int) -> Iterator[tuple[int, int]]:
    if r == 0:
        yield kx, ky
        return
    for x in range(kx - r, kx + r + 1):
        yield x, ky - r
        yield x, ky + r
    for y in range(ky - r + 1, ky + r):
        yield kx - r, y
        yield kx + r, y


def grid_build(store: EmbeddedStore, spec: IndexSpec) -> EmbeddedStore:
    """Index ``store`` with a uniform grid over (x, y, t)."""
    if spec.kind != "grid":
        raise ValueError("grid_build needs an IndexSpec of kind 'grid'")
    return store.build_index(spec)


class EmbeddedAdapter(SutAdapter):
    """Adapter over :class:`EmbeddedStore`. Accepts QueryInstance or neutral QueryText."""

    name = "embedded"
    dialect = "neutral"

    def __init__(self, index: IndexSpec | None = None):
        self.index_spec = index or IndexSpec()
        self.store = EmbeddedStore()
        self.state = "prepared-pending"

    def _require(self, *states: str) -> None:
        if self.state not in states:
            raise SutStateError(f"adapter is {self.state!r}, expected one of {', '.join(states)}")

    def prepare(self) -> None:
        self._require("prepared-pending")
        self.state = "prepared"

    def bulk_load(self, dataset: Dataset) -> None:
        self._require("prepared")
        self.store.load(dataset)
        self.state = "loaded"

    def build_index(self, spec: IndexSpec | None = None) -> None:
        self._require("loaded")
        if spec is not None:
            self.index_spec = spec
        self.store.build_index(self.index_spec)
        self.state = "ready"

    def execute(self, query: QueryText | QueryInstance) -> QueryResult:
        self._require("ready")
        if isinstance(query, QueryText):
            if query.dialect != self.dialect:
                raise QueryError(f"embedded adapter speaks {self.dialect!r}, not {query.dialect!r}")
            try:
                query = parse_neutral(query.text)
            except Exception as exc:
                raise QueryError(str(exc)) from exc
        return self.store.execute(query)

    def resource_snapshot(self) -> ResourceSample:
        return self.store.resource_snapshot()

    def teardown(self) -> None:
        self.state = "torn-down"


def _embedded_factory(config: Mapping[str, Any]) -> EmbeddedAdapter:
    index = config.get("index")
    if not isinstance(index, IndexSpec):
        index = IndexSpec.from_mapping(index)
    return EmbeddedAdapter(index)


register_adapter("embedded", _embedded_factory, replace=True)
