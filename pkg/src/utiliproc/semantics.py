"""Contextual reduction: transitions of a primary context between an outer and an inner context."""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Mapping, Optional

from .kernel import (
    EMPTY,
    EMPTY_CONTEXT,
    HOLE,
    UNIT_ACTION,
    UNIT_CONTEXT,
    Action,
    Algebra,
    Const,
    Context,
    Hole,
    ModelError,
    Prefix,
    Product,
    Resource,
    Sum,
    Term,
    Unit,
    UtilitySpec,
    render,
    substitute,
    world_value,
)

DEFAULT_DEPTH = 8


@dataclass(frozen=True)
class Rule:
    """Derivation tree of one transition."""

    tag: str
    premises: tuple["Rule", ...] = ()
    branch: Optional[int] = None
    values: tuple[Fraction, ...] = ()
    split: tuple[Resource, ...] = ()

    def shape(self) -> str:
        if not self.premises:
            return self.tag
        return f"{self.tag}({', '.join(p.shape() for p in self.premises)})"

    def to_json(self) -> dict:
        out: dict = {"rule": self.tag}
        if self.branch is not None:
            out["branch"] = self.branch
        if self.values:
            out["utilities"] = [str(v) for v in self.values]
        if self.split:
            out["split"] = [list(r.atoms) for r in self.split]
        if self.premises:
            out["premises"] = [p.to_json() for p in self.premises]
        return out


@dataclass(frozen=True)
class Transition:
    action: Action
    source: Context
    target: Context
    outer: Context
    inner: Context
    rule: Rule

    def sort_key(self):
        return (str(self.action), self.target.resource.atoms, render(self.target.process), self.rule.shape(), repr(self.rule))

    def to_json(self) -> dict:
        return {
            "action": list(self.action.factors),
            "source": context_json(self.source),
            "target": context_json(self.target),
            "derivation": self.rule.to_json(),
        }


@dataclass(frozen=True)
class TransitionSet:
    transitions: tuple[Transition, ...]
    truncated: bool = False

    def __iter__(self):
        return iter(self.transitions)

    def __len__(self):
        return len(self.transitions)

    def actions(self) -> set[Action]:
        return {t.action for t in self.transitions}


def context_json(c: Context) -> dict:
    return {"resource": list(c.resource.atoms), "process": render(c.process)}


_Step = tuple[Action, Resource, Term, Rule]


class Semantics:
    """Transition enumeration for one model, memoised per (context, outer, inner, fuel)."""

    def __init__(
        self,
        algebra: Algebra,
        definitions: Mapping[str, Term],
        utilities: Mapping[str, UtilitySpec],
        tolerance: Optional[float] = None,
    ):
        self.alg = algebra
        self.definitions = dict(definitions)
        self.utilities = dict(utilities)
        self.tolerance = tolerance
        self._memo: dict = {}

    # -- helpers

    def plug(self, c1: Context, c2: Context) -> Optional[Context]:
        if c1.is_closed:
            return c1
        r = self.alg.compose(c1.resource, c2.resource)
        if r is None:
            return None
        return Context(r, substitute(c1.process, c2.process))

    def utility(self, name: Optional[str]) -> Optional[UtilitySpec]:
        if name is None:
            return None
        try:
            return self.utilities[name]
        except KeyError:
            raise ModelError(f"undeclared utility {name!r}") from None

    # -- public

    def transitions(
        self,
        primary: Context,
        outer: Context = EMPTY_CONTEXT,
        inner: Context = EMPTY_CONTEXT,
        depth: int = DEFAULT_DEPTH,
    ) -> TransitionSet:
        steps, truncated = self._steps(primary.resource, primary.process, outer, inner, depth)
        out = {
            Transition(a, primary, Context(r, e), outer, inner, rule)
            for a, r, e, rule in steps
        }
        return TransitionSet(tuple(sorted(out, key=Transition.sort_key)), truncated)

    def can_step(self, primary: Context, outer: Context, inner: Context, depth: int) -> bool:
        return bool(self._steps(primary.resource, primary.process, outer, inner, depth)[0])

    # -- rules

    def _steps(self, R: Resource, E: Term, outer: Context, inner: Context, fuel: int):
        key = (R, E, outer, inner, fuel)
        hit = self._memo.get(key)
        if hit is not None:
            return hit
        self._memo[key] = ((), False)  # guards against re-entry through HOLE
        result = self._compute(R, E, outer, inner, fuel)
        self._memo[key] = result
        return result

    def _compute(self, R, E, outer, inner, fuel) -> tuple[tuple[_Step, ...], bool]:
        if isinstance(E, Unit):
            return ((UNIT_ACTION, R, E, Rule("TICK")),), False
        if isinstance(E, Prefix):
            r2 = self.alg.mu(E.action, R)
            if r2 is None:
                return (), False
            return ((E.action, r2, E.body, Rule("PREFIX")),), False
        if isinstance(E, Hole):
            if not R.is_unit:
                return (), False
            steps, trunc = self._steps(inner.resource, inner.process, outer, UNIT_CONTEXT, fuel)
            if steps:
                return ((UNIT_ACTION, EMPTY, HOLE, Rule("HOLE")),), trunc
            return (), trunc
        if isinstance(E, Const):
            if fuel <= 0:
                return (), True
            try:
                body = self.definitions[E.name]
            except KeyError:
                raise ModelError(f"undeclared process {E.name!r}") from None
            return self._steps(R, body, outer, inner, fuel - 1)
        if isinstance(E, Sum):
            return self._sum(R, E, outer, inner, fuel)
        if isinstance(E, Product):
            return self._product(R, E, outer, inner, fuel)
        raise TypeError(E)

    def _sum(self, R, E: Sum, outer, inner, fuel):
        if not E.branches:
            return (), False
        u = self.utility(E.utility)
        values: tuple[Fraction, ...] = ()
        if u is None:
            enabled = range(len(E.branches))
        else:
            vals = []
            for b in E.branches:
                local = self.plug(Context(R, b), inner)
                world = None if local is None else self.plug(outer, local)
                if world is None:
                    return (), False
                vals.append(world_value(u, world))
            enabled = [j for j, v in enumerate(vals) if all(_leq(x, v, self.tolerance) for x in vals)]
            values = tuple(vals)
        out = []
        truncated = False
        for j in enabled:
            others = E.branches[:j] + E.branches[j + 1:]
            residual = self.plug(Context(EMPTY, Sum(E.utility, others)), inner)
            if residual is None:
                continue
            assert isinstance(residual.process, Sum)
            wrapper = Context(residual.resource, Sum(E.utility, (HOLE,) + residual.process.branches))
            c3 = self.plug(outer, wrapper)
            if c3 is None:
                continue
            steps, trunc = self._steps(R, E.branches[j], c3, inner, fuel)
            truncated |= trunc
            for a, r2, e2, rule in steps:
                out.append((a, r2, e2, Rule("SUM", (rule,), branch=j, values=values)))
        return tuple(out), truncated

    def _product(self, R, E: Product, outer, inner, fuel):
        out = []
        truncated = False
        for r1, r2 in self.alg.splits(R):
            right = self.plug(Context(r2, E.right), inner)
            left = self.plug(Context(r1, E.left), inner)
            if right is None or left is None:
                continue
            c3 = self.plug(outer, Context(right.resource, Product(right.process, HOLE)))
            c4 = self.plug(outer, Context(left.resource, Product(left.process, HOLE)))
            if c3 is None or c4 is None:
                continue
            ls, t1 = self._steps(r1, E.left, c3, inner, fuel)
            if not ls:
                truncated |= t1
                continue
            rs, t2 = self._steps(r2, E.right, c4, inner, fuel)
            truncated |= t1 or t2
            for a, ra, ea, rule_a in ls:
                for b, rb, eb, rule_b in rs:
                    rr = self.alg.compose(ra, rb)
                    if rr is None:
                        continue
                    out.append((a * b, rr, Product(ea, eb), Rule("PROD", (rule_a, rule_b), split=(r1, r2))))
        return tuple(out), truncated

    # -- joint evolution of a primary and its surrounding

    def joint_step(
        self, primary: Context, surrounding: Context, depth: int = DEFAULT_DEPTH
    ) -> list[tuple[Transition, Transition]]:
        mine = self.transitions(primary, surrounding, EMPTY_CONTEXT, depth)
        theirs = self.transitions(surrounding, EMPTY_CONTEXT, primary, depth)
        return [(p, s) for p in mine for s in theirs]

    def derive_trace(
        self,
        primary: Context,
        surrounding: Context,
        actions: Iterable[Action],
        depth: int = DEFAULT_DEPTH,
    ) -> "TraceResult":
        """First witness run following ``actions`` for the primary, outer actions free."""
        actions = list(actions)
        best: list = []
        count = 0
        deepest = 0

        def walk(p: Context, s: Context, i: int, path: list):
            nonlocal count, deepest, best
            deepest = max(deepest, i)
            if i == len(actions):
                if count == 0:
                    best = list(path)
                count += 1
                return
            for pt, st in self.joint_step(p, s, depth):
                if pt.action == actions[i]:
                    path.append((pt, st))
                    walk(pt.target, st.target, i + 1, path)
                    path.pop()

        walk(primary, surrounding, 0, [])
        if count:
            return TraceResult(tuple(best), None, count)
        return TraceResult((), deepest, 0)


def _leq(x, y, tol):
    if tol is None:
        return x <= y
    return float(x) <= float(y) + tol


@dataclass(frozen=True)
class TraceResult:
    steps: tuple[tuple[Transition, Transition], ...]
    failed_at: Optional[int]
    multiplicity: int

    @property
    def ok(self) -> bool:
        return self.failed_at is None
