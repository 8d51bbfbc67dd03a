from __future__ import annotations

from ..errors import UnsupportedKindError
from ..model import Dataset
from .model import QueryInstance


def estimate_selectivity(instance: QueryInstance, dataset: Dataset) -> float:
    """Fraction of the dataset's points matched by a read query (brute-force count)."""
    from ..sut.oracle import bruteforce_eval

    if instance.kind.is_write:
        raise UnsupportedKindError(f"selectivity is undefined for write query {instance.kind}")
    total = dataset.total_points
    return len(bruteforce_eval(instance, dataset).rows) / total if total else 0.0
