"""The loaded form of a model file."""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from typing import Any, Optional

from .kernel import (
    NEUTRAL_UTILITY,
    Action,
    ActionSpec,
    Algebra,
    Context,
    ModelError,
    Resource,
    Term,
    UtilitySpec,
)
from .semantics import Semantics

ERROR = "error"
WARNING = "warning"


@dataclass(frozen=True, order=True)
class Diagnostic:
    line: int
    column: int
    severity: str
    code: str
    message: str

    def __str__(self):
        return f"{self.line}:{self.column}: {self.severity} [{self.code}] {self.message}"

    def to_json(self) -> dict:
        return {
            "severity": self.severity,
            "line": self.line,
            "column": self.column,
            "code": self.code,
            "message": self.message,
        }


@dataclass(frozen=True)
class CostSpec:
    name: str
    per_action: tuple[tuple[str, Fraction], ...] = ()

    @cached_property
    def table(self) -> dict[str, Fraction]:
        return dict(self.per_action)

    def cost(self, a: Action) -> Fraction:
        total = Fraction(0)
        for f in a.factors:
            try:
                total += self.table[f]
            except KeyError:
                raise ModelError(f"cost {self.name} has no entry for action {f!r}") from None
        return total


@dataclass(frozen=True)
class UniverseDecl:
    name: str
    contexts: tuple[Context, ...] = ()
    generate: Optional[int] = None
    depth: Optional[int] = None


@dataclass(frozen=True)
class Query:
    name: str
    kind: str
    fields: tuple[tuple[str, Any], ...]

    def get(self, key: str, default=None):
        for k, v in self.fields:
            if k == key:
                return v
        return default


@dataclass
class Model:
    atoms: dict[str, int] = field(default_factory=dict)
    actions: dict[str, ActionSpec] = field(default_factory=dict)
    overrides: dict[tuple[Action, Resource], Resource] = field(default_factory=dict)
    resources: dict[str, Resource] = field(default_factory=dict)
    processes: dict[str, Term] = field(default_factory=dict)
    utilities: dict[str, UtilitySpec] = field(default_factory=dict)
    costs: dict[str, CostSpec] = field(default_factory=dict)
    atomprops: dict[str, tuple[Context, ...]] = field(default_factory=dict)
    universes: dict[str, UniverseDecl] = field(default_factory=dict)
    queries: dict[str, Query] = field(default_factory=dict)
    diagnostics: list[Diagnostic] = field(default_factory=list, compare=False, repr=False)
    source_lines: dict[str, tuple[int, int]] = field(default_factory=dict, compare=False, repr=False)

    @cached_property
    def algebra(self) -> Algebra:
        return Algebra(self.atoms, self.actions, self.overrides)

    def semantics(self, tolerance: Optional[float] = None) -> Semantics:
        key = ("_sem", tolerance)
        cache = self.__dict__.setdefault("_sem_cache", {})
        if key not in cache:
            cache[key] = Semantics(self.algebra, self.processes, self.utilities, tolerance)
        return cache[key]

    def utility(self, name: Optional[str]) -> UtilitySpec:
        if name is None:
            return NEUTRAL_UTILITY
        try:
            return self.utilities[name]
        except KeyError:
            raise ModelError(f"undeclared utility {name!r}") from None

    def location(self, key: str) -> tuple[int, int]:
        return self.source_lines.get(key, (0, 0))

    def __eq__(self, other):
        if not isinstance(other, Model):
            return NotImplemented
        names = ("atoms", "actions", "overrides", "resources", "processes", "utilities",
                 "costs", "atomprops", "universes", "queries")
        return all(getattr(self, n) == getattr(other, n) for n in names)

    __hash__ = None
