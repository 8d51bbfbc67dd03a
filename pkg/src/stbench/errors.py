"""Exception hierarchy shared across the suite."""

from __future__ import annotations


class StbenchError(Exception):
    """Base class for every error raised by stbench."""


class ConfigError(StbenchError):
    """A configuration value is missing or invalid.

    ``field`` names the offending key (dotted path where useful).
    """

    def __init__(self, field: str, message: str):
        self.field = field
        super().__init__(f"{field}: {message}")


class DatasetValidationError(StbenchError):
    def __init__(self, violations):
        self.violations = list(violations)
        lines = "; ".join(str(v) for v in self.violations[:5])
        more = "" if len(self.violations) <= 5 else f" (+{len(self.violations) - 5} more)"
        super().__init__(f"invalid dataset: {lines}{more}")


class ParseError(StbenchError):
    """Malformed input text. ``line`` and ``position`` are 1-based when known."""

    def __init__(self, message: str, *, line: int | None = None,
                 position: int | None = None, source: str | None = None):
        self.line = line
        self.position = position
        self.source = source
        where = []
        if source:
            where.append(str(source))
        if line is not None:
            where.append(f"line {line}")
        if position is not None:
            where.append(f"position {position}")
        prefix = ", ".join(where)
        super().__init__(f"{prefix}: {message}" if prefix else message)


class RegistryError(StbenchError):
    pass


class DuplicateNameError(RegistryError):
    pass


class UnknownNameError(RegistryError):
    pass


class UnsupportedKindError(StbenchError):
    pass


class QueryError(StbenchError):
    """A query could not be executed by the system under test."""


class SutStateError(StbenchError):
    """Adapter lifecycle method called out of order."""


class SetupError(StbenchError):
    """Failure before any measurement started."""


class EmptyWindowError(StbenchError):
    pass


class ComparisonError(StbenchError):
    pass
