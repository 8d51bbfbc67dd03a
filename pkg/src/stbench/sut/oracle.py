"""Brute-force reference evaluator. Deliberately index-free and simple."""

from __future__ import annotations

from typing import Iterable

from ..errors import UnsupportedKindError
from ..model import Dataset, TrajectoryPoint
from ..query.model import QueryInstance, QueryKind
from .base import QueryResult


def knn_key(q: QueryInstance, p: TrajectoryPoint) -> tuple[float, int, int]:
    """Total order for k-NN: squared distance, then object_id, then t."""
    dx = p.pos.x - q.center.x
    dy = p.pos.y - q.center.y
    return (dx * dx + dy * dy, p.object_id, p.t)


def matches(q: QueryInstance, p: TrajectoryPoint) -> bool:
    """Whether ``p`` satisfies the filter of a range or trajectory query."""
    k = q.kind
    if k is QueryKind.OBJECT_TRAJECTORY and p.object_id != q.object_id:
        return False
    if q.region is not None and not q.region.contains(p.pos):
        return False
    if q.interval is not None and not q.interval.contains(p.t):
        return False
    return True


def evaluate_points(q: QueryInstance, points: Iterable[TrajectoryPoint]) -> frozenset[TrajectoryPoint]:
    if q.kind is QueryKind.KNN:
        window = q.knn_interval
        candidates = sorted((p for p in points if window.contains(p.t)), key=lambda p: knn_key(q, p))
        return frozenset(candidates[: q.k])
    return frozenset(p for p in points if matches(q, p))


def bruteforce_eval(instance: QueryInstance, dataset: Dataset) -> QueryResult:
    """Exact answer of a read query by scanning every point of ``dataset``."""
    if instance.kind.is_write:
        raise UnsupportedKindError(f"the oracle only evaluates reads, not {instance.kind}")
    return QueryResult(instance.kind, rows=evaluate_points(instance, dataset.points()))
