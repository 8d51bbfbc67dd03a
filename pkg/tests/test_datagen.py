import io
import math
from pathlib import Path

import pytest
from hypothesis import given, settings, strategies as st

from stbench.datagen import (
    DataGenConfig,
    dataset_bytes,
    export_dataset,
    generate_dataset,
    import_dataset,
)
from stbench.errors import ConfigError, DatasetValidationError, ParseError
from stbench.model import Dataset, Region, TimeInterval, Trajectory, summarize, validate_dataset

from conftest import UNIT, dataset_of, make_config, tp

GOLDEN = Path(__file__).parent / "golden"


def test_counts_and_spacing():
    cfg = make_config(seed=1, n_objects=3, points=5, interval=250)
    d = generate_dataset(cfg)
    assert len(d.trajectories) == 3 and d.total_points == 15
    for tr in d.trajectories:
        assert [p.t for p in tr.points] == [0, 250, 500, 750, 1000]
    assert validate_dataset(d) == []


def test_deterministic_bytes():
    cfg = make_config(seed=1)
    assert dataset_bytes(generate_dataset(cfg)) == dataset_bytes(generate_dataset(cfg))


def test_thread_count_does_not_change_output():
    cfg = make_config(seed=77, n_objects=25, points=(5, 40))
    assert dataset_bytes(generate_dataset(cfg, threads=1)) == dataset_bytes(generate_dataset(cfg, threads=6))


def test_seed_changes_output():
    a = generate_dataset(make_config(seed=1))
    b = generate_dataset(make_config(seed=2))
    assert [p.key() for p in a.points()] != [p.key() for p in b.points()]


def test_golden_dataset():
    # Frozen output: any change to the RNG or movement model shows up here.
    d = generate_dataset(make_config(seed=1, n_objects=2, points=3))
    assert dataset_bytes(d) == (GOLDEN / "dataset_seed1_2x3.csv").read_bytes()


def test_summary_of_generated_dataset():
    s = summarize(generate_dataset(make_config(n_objects=10, points=20)))
    assert (s.object_count, s.total_points) == (10, 200)


def test_variable_lengths_within_range():
    d = generate_dataset(make_config(seed=4, n_objects=40, points=(3, 9)))
    lengths = [len(tr) for tr in d.trajectories]
    assert min(lengths) >= 3 and max(lengths) <= 9 and len(set(lengths)) > 1


@settings(max_examples=40, deadline=None)
@given(
    seed=st.integers(0, 2**64 - 1),
    n=st.integers(1, 6),
    pts=st.integers(1, 60),
    speed_lo=st.floats(0.001, 5.0),
    speed_span=st.floats(0.0, 5.0),
    interval=st.integers(1, 5000),
    w=st.floats(0.5, 100.0),
    h=st.floats(0.5, 100.0),
)
def test_movement_invariants(seed, n, pts, speed_lo, speed_span, interval, w, h):
    region = Region.of(-w / 2, 10.0, w / 2, 10.0 + h)
    cfg = DataGenConfig(seed, n, pts, region, speed_lo, speed_lo + speed_span, interval)
    d = generate_dataset(cfg)
    assert len(d.trajectories) == n and d.total_points == n * pts
    dt = interval / 1000.0
    for tr in d.trajectories:
        for a, b in zip(tr.points, tr.points[1:]):
            assert b.t - a.t == interval
            assert math.hypot(b.x - a.x, b.y - a.y) / dt <= cfg.speed_max + 1e-9
        for p in tr.points:
            assert region.contains(p.pos)


@pytest.mark.parametrize("field,kwargs", [
    ("n_objects", dict(n_objects=0)),
    ("points_per_object", dict(points_per_object=0)),
    ("points_per_object", dict(points_per_object=(5, 2))),
    ("region", dict(region=Region.of(0, 0, 0, 1))),
    ("speed_min", dict(speed_min=0.0)),
    ("speed_max", dict(speed_min=2.0, speed_max=1.0)),
    ("sample_interval_ms", dict(sample_interval_ms=0)),
    ("seed", dict(seed=-1)),
])
def test_invalid_config_names_field(field, kwargs):
    base = dict(seed=1, n_objects=2, points_per_object=3, region=UNIT, speed_min=0.1, speed_max=0.2,
                sample_interval_ms=100)
    base.update(kwargs)
    with pytest.raises(ConfigError) as err:
        DataGenConfig(**base)
    assert err.value.field == field


def test_from_mapping():
    cfg = DataGenConfig.from_mapping({
        "seed": 3, "n_objects": 2, "points_per_object": [2, 4], "region": {"min": [0, 0], "max": [2, 3]},
        "speed_min": 1, "speed_max": 2, "sample_interval_ms": 10,
    })
    assert cfg.points_per_object == (2, 4) and cfg.region == Region.of(0, 0, 2, 3)


def test_export_single_point():
    buf = io.BytesIO()
    n = export_dataset(dataset_of([tp(0, 0, 1.5, 2.5)]), buf)
    assert buf.getvalue() == b"object_id,t,x,y\n0,0,1.5,2.5\n"
    assert n == len(buf.getvalue())


def test_export_rejects_empty_trajectory():
    d = Dataset((Trajectory(0, ()),), Region.of(0, 0, 0, 0), TimeInterval(0, 0))
    with pytest.raises(DatasetValidationError):
        export_dataset(d, io.BytesIO())


def test_round_trip_seeded_dataset():
    d = generate_dataset(make_config(n_objects=10, points=20))
    back = import_dataset(io.BytesIO(dataset_bytes(d)))
    assert back == d
    assert back.extent == d.extent and back.time_span == d.time_span


def test_import_single_point():
    d = import_dataset(io.BytesIO(b"object_id,t,x,y\n0,0,1.5,2.5\n"))
    assert [p.key() for p in d.points()] == [(0, 0, 1.5, 2.5)]
    assert validate_dataset(d) == []


def test_import_parse_error_line_number():
    with pytest.raises(ParseError) as err:
        import_dataset(io.BytesIO(b"object_id,t,x,y\n0,abc,1,2\n"))
    assert err.value.line == 2


@pytest.mark.parametrize("body", [b"0,0,1\n", b"0,0,1,nan\n", b"-1,0,1,2\n", b"0,0,x,2\n"])
def test_import_malformed(body):
    with pytest.raises(ParseError):
        import_dataset(io.BytesIO(b"object_id,t,x,y\n" + body))


def test_import_bad_header():
    with pytest.raises(ParseError) as err:
        import_dataset(io.BytesIO(b"id,t,x,y\n0,0,1,2\n"))
    assert err.value.line == 1


def test_import_interleaved_objects():
    body = b"object_id,t,x,y\n0,0,1,1\n1,0,2,2\n0,10,1,1\n"
    with pytest.raises(DatasetValidationError) as err:
        import_dataset(io.BytesIO(body))
    assert err.value.violations[0].code == "sort-order"


def test_import_non_increasing_time():
    with pytest.raises(DatasetValidationError):
        import_dataset(io.BytesIO(b"object_id,t,x,y\n0,5,1,1\n0,5,2,2\n"))
