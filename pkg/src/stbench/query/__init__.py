"""Query model, template instantiation and dialect translation."""

from .model import (
    QueryInstance,
    QueryKind,
    QueryTemplate,
    QueryText,
    RANGE_KINDS,
    compatibility_problems,
)
from .instantiate import apportion, instantiate, kind_counts
from .dialects import (
    Dialect,
    DialectRegistry,
    default_registry,
    emit_generic_sql,
    emit_neutral,
    parse_neutral,
    register_dialect,
    translate,
)
from .selectivity import estimate_selectivity

__all__ = [
    "Dialect", "DialectRegistry", "QueryInstance", "QueryKind", "QueryTemplate", "QueryText",
    "RANGE_KINDS", "apportion", "compatibility_problems", "default_registry", "emit_generic_sql",
    "emit_neutral", "estimate_selectivity", "instantiate", "kind_counts", "parse_neutral",
    "register_dialect", "translate",
]
