"""System-under-test adapters, the embedded reference store and the oracle."""

from .base import (
    IndexSpec,
    QueryResult,
    ResourceSample,
    SutAdapter,
    adapter_for,
    register_adapter,
    registered_adapters,
    unregister_adapter,
)
from .oracle import bruteforce_eval, knn_key
from .embedded import EmbeddedAdapter, EmbeddedStore, grid_build

__all__ = [
    "EmbeddedAdapter", "EmbeddedStore", "IndexSpec", "QueryResult", "ResourceSample", "SutAdapter",
    "adapter_for", "bruteforce_eval", "grid_build", "knn_key", "register_adapter",
    "registered_adapters", "unregister_adapter",
]
