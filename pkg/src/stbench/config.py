"""Suite configuration: one YAML document with data/queries/sut/workload/analysis sections."""

from __future__ import annotations

import importlib
import json
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Any, Iterable, Mapping

import jsonschema
import yaml

from .analysis import AnalysisConfig
from .datagen import DataGenConfig
from .errors import ConfigError, ParseError, StbenchError
from .loadgen import WorkloadConfig
from .query.dialects import DialectRegistry, default_registry
from .query.model import QueryTemplate
from .sut.base import IndexSpec, adapter_for, registered_adapters

SECTIONS = ("data", "queries", "sut", "workload", "analysis")


@dataclass(frozen=True)
class Diagnostic:
    level: str  # "error" or "warning"
    message: str

    def __str__(self) -> str:
        return f"{self.level}: {self.message}"


@dataclass(frozen=True)
class QueriesConfig:
    templates: tuple[QueryTemplate, ...]
    seed: int
    count: int
    dialect: str = "neutral"

    @classmethod
    def from_mapping(cls, data: Mapping[str, Any]) -> QueriesConfig:
        templates = []
        for i, t in enumerate(data.get("templates") or ()):
            try:
                templates.append(QueryTemplate.from_mapping(t))
            except ConfigError as exc:
                raise ConfigError(f"templates[{i}].{exc.field}", str(exc).split(": ", 1)[-1]) from None
        if not templates:
            raise ConfigError("templates", "template set is empty")
        if sum(t.weight for t in templates) <= 0:
            raise ConfigError("templates", "template weights must not all be zero")
        return cls(tuple(templates), data["seed"], data["count"], data.get("dialect", "neutral"))


@dataclass(frozen=True)
class SutConfig:
    adapter: str
    index: IndexSpec = field(default_factory=IndexSpec)
    options: Mapping[str, Any] = field(default_factory=dict)
    plugin: str | None = None

    @classmethod
    def from_mapping(cls, data: Mapping[str, Any]) -> SutConfig:
        return cls(data["adapter"], IndexSpec.from_mapping(data.get("index")),
                   dict(data.get("options") or {}), data.get("plugin"))

    def load_plugin(self) -> None:
        """Import the module named by ``plugin``; it is expected to call ``register_adapter``."""
        if self.plugin:
            try:
                importlib.import_module(self.plugin)
            except ImportError as exc:
                raise ConfigError("sut.plugin", f"cannot import {self.plugin!r}: {exc}") from None

    def create_adapter(self):
        self.load_plugin()
        return adapter_for(self.adapter, {**self.options, "index": self.index})


@dataclass(frozen=True)
class SuiteConfig:
    raw: Mapping[str, Any]
    data: DataGenConfig | None = None
    queries: QueriesConfig | None = None
    sut: SutConfig | None = None
    workload: WorkloadConfig | None = None
    analysis: AnalysisConfig | None = None
    path: Path | None = None

    def require(self, *sections: str) -> None:
        missing = [s for s in sections if getattr(self, s) is None]
        if missing:
            raise ConfigError(missing[0], "section is required for this command")

    def snapshot(self) -> dict[str, Any]:
        return json.loads(json.dumps(dict(self.raw), default=str))


def load_schema() -> dict[str, Any]:
    text = resources.files("stbench").joinpath("schema/suite.schema.json").read_text(encoding="utf-8")
    return json.loads(text)


def parse_yaml(text: str, source: str | None = None) -> Any:
    try:
        return yaml.safe_load(text)
    except yaml.MarkedYAMLError as exc:
        mark = exc.problem_mark or exc.context_mark
        line = mark.line + 1 if mark else None
        col = mark.column + 1 if mark else None
        raise ParseError(f"YAML syntax error: {exc.problem or exc}", line=line, position=col, source=source) from None
    except yaml.YAMLError as exc:
        raise ParseError(f"YAML error: {exc}", source=source) from None


_BUILDERS = {
    "data": DataGenConfig.from_mapping,
    "queries": QueriesConfig.from_mapping,
    "sut": SutConfig.from_mapping,
    "workload": WorkloadConfig.from_mapping,
    "analysis": AnalysisConfig.from_mapping,
}


def _schema_path(err: jsonschema.ValidationError) -> str:
    return ".".join(str(p) for p in err.absolute_path) or "<root>"


def check(raw: Any, registry: DialectRegistry | None = None,
          path: Path | None = None) -> tuple[SuiteConfig | None, list[Diagnostic]]:
    """Full schema and cross-field validation, collecting every problem."""
    diags: list[Diagnostic] = []
    if raw is None:
        raw = {}
    if not isinstance(raw, dict):
        return None, [Diagnostic("error", "configuration must be a mapping of sections")]
    for key in raw:
        if key not in SECTIONS:
            diags.append(Diagnostic("warning", f"unused section {key!r} (known: {', '.join(SECTIONS)})"))
    validator = jsonschema.Draft202012Validator(load_schema())
    schema_errors = sorted(validator.iter_errors(raw), key=lambda e: list(map(str, e.absolute_path)))
    for err in schema_errors:
        diags.append(Diagnostic("error", f"{_schema_path(err)}: {err.message}"))
    if schema_errors:
        return None, diags

    built: dict[str, Any] = {}
    for section in SECTIONS:
        if section in raw:
            try:
                built[section] = _BUILDERS[section](raw[section] or {})
            except ConfigError as exc:
                diags.append(Diagnostic("error", f"{section}.{exc}"))
            except (TypeError, ValueError) as exc:
                diags.append(Diagnostic("error", f"{section}: {exc}"))
    cfg = SuiteConfig(raw=raw, path=path, **built)

    q, w, s = cfg.queries, cfg.workload, cfg.sut
    if q is not None and w is not None and q.count != w.total_ops:
        diags.append(Diagnostic("error", f"queries.count ({q.count}) must equal workload.total_ops ({w.total_ops})"))
    registry = registry or default_registry()
    if q is not None and q.dialect not in registry:
        diags.append(Diagnostic("error", f"queries.dialect {q.dialect!r} is not registered "
                                         f"(registered: {', '.join(registry.names())})"))
    if s is not None:
        try:
            adapter = s.create_adapter()
        except StbenchError as exc:
            diags.append(Diagnostic("error", f"sut.adapter: {exc}"))
        else:
            declared = getattr(adapter, "dialect", None)
            if q is not None and declared and q.dialect != declared:
                diags.append(Diagnostic("error", f"queries.dialect {q.dialect!r} differs from adapter "
                                                 f"{s.adapter!r} dialect {declared!r}"))
    if any(d.level == "error" for d in diags):
        return None, diags
    return cfg, diags


def load_config(path: str | Path, registry: DialectRegistry | None = None) -> tuple[SuiteConfig, list[Diagnostic]]:
    """Read and validate; raises ConfigError carrying every error message."""
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError("config", f"cannot read {path}: {exc.strerror or exc}") from None
    try:
        raw = parse_yaml(text, source=str(path))
    except ParseError as exc:
        raise ConfigError("config", str(exc)) from None
    cfg, diags = check(raw, registry, path)
    if cfg is None:
        errors = [d.message for d in diags if d.level == "error"]
        raise ConfigError("config", "; ".join(errors))
    return cfg, diags


def known_adapters() -> Iterable[str]:
    return registered_adapters()
