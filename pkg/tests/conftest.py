from __future__ import annotations

import itertools
import threading
import time

import pytest

from stbench.datagen import DataGenConfig, generate_dataset
from stbench.model import Dataset, Point2D, Region, Trajectory, TrajectoryPoint
from stbench.query.model import QueryInstance, QueryKind
from stbench.sut.base import IndexSpec, QueryResult, ResourceSample, SutAdapter

UNIT = Region.of(0.0, 0.0, 1.0, 1.0)


def make_config(seed=1, n_objects=10, points=20, region=UNIT, speed=(0.01, 0.05), interval=1000):
    return DataGenConfig(seed=seed, n_objects=n_objects, points_per_object=points, region=region,
                         speed_min=speed[0], speed_max=speed[1], sample_interval_ms=interval)


def tp(oid, t, x, y):
    return TrajectoryPoint(oid, t, Point2D(x, y))


def dataset_of(*trajectories):
    return Dataset.from_trajectories(
        [Trajectory(pts[0].object_id, tuple(pts)) for pts in trajectories]
    )


@pytest.fixture(scope="session")
def small_dataset():
    return generate_dataset(make_config(seed=3, n_objects=10, points=20))


class ScriptedAdapter(SutAdapter):
    """Stub SUT: fixed latency, optional failure on every ``fail_every``-th call."""

    name = "scripted"
    dialect = "neutral"

    def __init__(self, latency_s: float = 0.0, fail_every: int | None = None, fail_setup: bool = False):
        self.latency_s = latency_s
        self.fail_every = fail_every
        self.fail_setup = fail_setup
        self._calls = itertools.count(1)
        self._lock = threading.Lock()
        self.executed: list = []

    def prepare(self):
        pass

    def bulk_load(self, dataset):
        pass

    def build_index(self, spec: IndexSpec | None = None):
        pass

    def execute(self, query):
        with self._lock:
            n = next(self._calls)
            self.executed.append(query)
        if self.latency_s:
            time.sleep(self.latency_s)
        if self.fail_every and n % self.fail_every == 0:
            raise RuntimeError(f"scripted failure on call {n}")
        kind = query.kind if isinstance(query, QueryInstance) else QueryKind.SPATIAL_RANGE
        if kind.is_write:
            return QueryResult(kind, accepted=True, row_count=1)
        return QueryResult(kind, rows=frozenset())

    def resource_snapshot(self):
        if self.fail_setup:
            raise ConnectionError("connection refused")
        return ResourceSample()

    def teardown(self):
        pass


def read_templates():
    """Every read kind, anchored and not, with mixed window sizes."""
    from stbench.query.model import QueryTemplate
    K = QueryKind
    return [
        QueryTemplate(K.SPATIAL_RANGE, spatial_fraction=0.1),
        QueryTemplate(K.SPATIAL_RANGE, spatial_fraction=0.3, anchored=True),
        QueryTemplate(K.TEMPORAL_RANGE, temporal_fraction=0.2),
        QueryTemplate(K.TEMPORAL_RANGE, temporal_fraction=0.05, anchored=True),
        QueryTemplate(K.SPATIOTEMPORAL_RANGE, spatial_fraction=0.2, temporal_fraction=0.3),
        QueryTemplate(K.SPATIOTEMPORAL_RANGE, spatial_fraction=0.05, temporal_fraction=0.1, anchored=True),
        QueryTemplate(K.KNN, k=1),
        QueryTemplate(K.KNN, k=7, anchored=True),
        QueryTemplate(K.OBJECT_TRAJECTORY, temporal_fraction=0.5),
    ]


ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
