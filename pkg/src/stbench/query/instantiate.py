"""Turn weighted query templates into concrete, dataset-compatible instances."""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

from ..errors import ConfigError
from ..model import Dataset, DatasetSummary, Point2D, Region, TimeInterval, TrajectoryPoint
from ..rng import SplitMix64
from .model import QueryInstance, QueryKind, QueryTemplate

# Substream tags; keep stable, they are part of the determinism contract.
_SHUFFLE_STREAM = 0
_INSTANCE_STREAM = 1

_NEEDS_DATASET = {QueryKind.OBJECT_TRAJECTORY, QueryKind.APPEND_POINT}


def apportion(weights: Sequence[float], count: int) -> list[int]:
    """Largest-remainder apportionment of ``count`` seats by ``weights``.

    Quotas are computed exactly with fractions; ties on the remainder go to
    the earlier index.
    """
    if count < 0:
        raise ValueError("count must be non-negative")
    exact = [Fraction(w) for w in weights]
    total = sum(exact)
    if total <= 0:
        raise ConfigError("weight", "template weights must not all be zero")
    quotas = [w * count / total for w in exact]
    seats = [math.floor(q) for q in quotas]
    remaining = count - sum(seats)
    order = sorted(range(len(quotas)), key=lambda i: (-(quotas[i] - seats[i]), i))
    for i in order[:remaining]:
        seats[i] += 1
    return seats


@dataclass(frozen=True)
class _DataContext:
    """Facts about the target dataset needed beyond its summary."""

    points: tuple[TrajectoryPoint, ...]
    object_ids: tuple[int, ...]
    spans: dict[int, TimeInterval]
    tails: dict[int, TrajectoryPoint]
    gaps: dict[int, int]
    max_speed: float  # units per millisecond
    knn_tolerance_ms: int

    @classmethod
    def of(cls, d: Dataset) -> _DataContext:
        points = []
        spans, tails, gaps = {}, {}, {}
        min_gap = None
        max_speed = 0.0
        for tr in sorted(d.trajectories, key=lambda tr: tr.object_id):
            pts = tr.points
            points.extend(pts)
            spans[tr.object_id] = TimeInterval(pts[0].t, pts[-1].t)
            tails[tr.object_id] = pts[-1]
            for a, b in zip(pts, pts[1:]):
                gap = b.t - a.t
                min_gap = gap if min_gap is None else min(min_gap, gap)
                dx, dy = b.pos.x - a.pos.x, b.pos.y - a.pos.y
                dist = math.sqrt(dx * dx + dy * dy)
                max_speed = max(max_speed, dist / gap)
            if len(pts) >= 2:
                gaps[tr.object_id] = pts[-1].t - pts[-2].t
        default_gap = min_gap or 1000
        for oid in spans:
            gaps.setdefault(oid, default_gap)
        return cls(
            points=tuple(points),
            object_ids=tuple(sorted(spans)),
            spans=spans,
            tails=tails,
            gaps=gaps,
            max_speed=max_speed,
            knn_tolerance_ms=(min_gap or 0) // 2,
        )


def _window(extent: Region, fraction: float, center: Point2D) -> Region:
    hw = fraction * extent.width / 2
    hh = fraction * extent.height / 2
    return Region.of(center.x - hw, center.y - hh, center.x + hw, center.y + hh)


def _interval(length: int, center: int) -> TimeInterval:
    start = max(0, center - length // 2)
    return TimeInterval(start, start + length)


def _uniform_point(rng: SplitMix64, extent: Region) -> Point2D:
    return Point2D(rng.uniform(extent.min.x, extent.max.x), rng.uniform(extent.min.y, extent.max.y))


def _read_instance(tpl: QueryTemplate, iid: int, rng: SplitMix64,
                   summary: DatasetSummary, ctx: _DataContext | None) -> QueryInstance:
    extent, span = summary.extent, summary.time_span
    kind = tpl.kind
    anchor = None
    if tpl.is_anchored:
        anchor = ctx.points[rng.randbelow(len(ctx.points))]

    if kind is QueryKind.KNN:
        if anchor is not None:
            center, at_time = anchor.pos, anchor.t
        else:
            center = _uniform_point(rng, extent)
            at_time = rng.randint(span.start, span.end)
        tol = ctx.knn_tolerance_ms if ctx is not None else 0
        return QueryInstance(kind, iid, center=center, at_time=at_time, k=tpl.k, time_tolerance_ms=tol)

    if kind is QueryKind.OBJECT_TRAJECTORY:
        oid = ctx.object_ids[rng.randbelow(len(ctx.object_ids))]
        own = ctx.spans[oid]
        length = math.floor(tpl.temporal_fraction * span.length)
        return QueryInstance(kind, iid, object_id=oid,
                             interval=_interval(length, rng.randint(own.start, own.end)))

    region = interval = None
    if tpl.spatial_fraction is not None:
        center = anchor.pos if anchor is not None else _uniform_point(rng, extent)
        region = _window(extent, tpl.spatial_fraction, center)
    if tpl.temporal_fraction is not None:
        tc = anchor.t if anchor is not None else rng.randint(span.start, span.end)
        interval = _interval(math.floor(tpl.temporal_fraction * span.length), tc)
    return QueryInstance(kind, iid, region=region, interval=interval)


def _append_instance(iid: int, rng: SplitMix64, summary: DatasetSummary, ctx: _DataContext,
                     tails: dict[int, TrajectoryPoint]) -> QueryInstance:
    oid = ctx.object_ids[rng.randbelow(len(ctx.object_ids))]
    tail = tails[oid]
    gap = ctx.gaps[oid]
    reach = ctx.max_speed * gap
    # direction from rejection sampling in the unit disk; avoids libm trig
    while True:
        ux, uy = rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0)
        r2 = ux * ux + uy * uy
        if 0.0 < r2 <= 1.0:
            break
    scale = rng.uniform(0.0, reach) / math.sqrt(r2)
    ext = summary.extent
    x = min(max(tail.pos.x + ux * scale, ext.min.x), ext.max.x)
    y = min(max(tail.pos.y + uy * scale, ext.min.y), ext.max.y)
    point = TrajectoryPoint(oid, tail.t + gap, Point2D(x, y))
    tails[oid] = point
    return QueryInstance(QueryKind.APPEND_POINT, iid, new_point=point)


def instantiate(templates: Sequence[QueryTemplate], summary: DatasetSummary, seed: int, count: int,
                dataset: Dataset | None = None, threads: int = 1) -> list[QueryInstance]:
    """Instantiate ``count`` queries mixed by template weight.

    Anchored templates, ``ObjectTrajectory`` and ``AppendPoint`` need the
    ``dataset`` itself, not just its summary. Appends to the same object
    chain one sample interval past each other in instance order.
    """
    templates = list(templates)
    if not templates:
        raise ConfigError("templates", "template set is empty")
    if count < 0:
        raise ConfigError("count", "must be non-negative")
    if dataset is None and any(t.is_anchored or t.kind in _NEEDS_DATASET for t in templates):
        raise ConfigError("dataset", "anchored, ObjectTrajectory and AppendPoint templates need the dataset")
    ctx = _DataContext.of(dataset) if dataset is not None else None

    seats = apportion([t.weight for t in templates], count)
    order = [i for i, n in enumerate(seats) for _ in range(n)]
    SplitMix64.substream(seed, _SHUFFLE_STREAM).shuffle(order)

    def make_read(iid: int) -> QueryInstance | None:
        tpl = templates[order[iid]]
        if tpl.kind.is_write:
            return None
        return _read_instance(tpl, iid, SplitMix64.substream(seed, _INSTANCE_STREAM, iid), summary, ctx)

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            out = list(pool.map(make_read, range(count)))
    else:
        out = [make_read(i) for i in range(count)]

    tails = dict(ctx.tails) if ctx is not None else {}
    for iid, q in enumerate(out):
        if q is None:
            out[iid] = _append_instance(iid, SplitMix64.substream(seed, _INSTANCE_STREAM, iid), summary, ctx, tails)
    return out


def kind_counts(instances: Sequence[QueryInstance]) -> dict[QueryKind, int]:
    counts: dict[QueryKind, int] = {}
    for q in instances:
        counts[q.kind] = counts.get(q.kind, 0) + 1
    return counts
