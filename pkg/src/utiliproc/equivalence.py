"""Bounded bisimilarity, local equivalence and the utility obligations built on them.

Every verdict is relative to a finite ``ContextUniverse`` and a refinement depth:
"not related" is a genuine refutation, "related" means related at that depth
over that universe.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Optional, Sequence

from .kernel import (
    EMPTY,
    EMPTY_CONTEXT,
    ONE,
    UNIT_CONTEXT,
    ZERO,
    Action,
    Context,
    Product,
    Resource,
    Sum,
    Term,
    UsageError,
    UtilitySpec,
    close,
    leq,
    render,
    world_value,
)
from .semantics import DEFAULT_DEPTH, Semantics, context_json


@dataclass(frozen=True)
class ContextUniverse:
    """Finite quantification domain standing in for "all contexts" and "all resources"."""

    contexts: tuple[Context, ...]
    depth: int = DEFAULT_DEPTH
    cross_pairs: bool = True

    def __post_init__(self):
        seen = dict.fromkeys(self.contexts)
        object.__setattr__(self, "contexts", tuple(seen))

    def __len__(self):
        return len(self.contexts)

    @property
    def closed(self) -> tuple[Context, ...]:
        return tuple(c for c in self.contexts if c.is_closed)

    @property
    def open(self) -> tuple[Context, ...]:
        return tuple(c for c in self.contexts if c.is_open)

    @property
    def outers(self) -> tuple[Context, ...]:
        return (EMPTY_CONTEXT,) + tuple(c for c in self.open if c != EMPTY_CONTEXT)

    @property
    def inners(self) -> tuple[Context, ...]:
        return (EMPTY_CONTEXT,) + self.closed

    def resources(self, sem: Semantics, extra: Iterable[Resource] = ()) -> tuple[Resource, ...]:
        """Sub-resources of the atom-wise join of every member resource."""
        alg = sem.alg
        top = [0] * len(alg.vector(EMPTY))
        for r in itertools.chain((c.resource for c in self.contexts), extra):
            top = [max(x, y) for x, y in zip(top, alg.vector(r))]
        found = alg.subresources(alg.resource(top))
        return tuple(sorted(found, key=lambda r: (len(r), r.atoms)))

    def closed_processes(self) -> tuple[Term, ...]:
        return tuple(dict.fromkeys(c.process for c in self.closed))

    def with_contexts(self, extra: Iterable[Context]) -> "ContextUniverse":
        return ContextUniverse(self.contexts + tuple(extra), self.depth, self.cross_pairs)


@dataclass(frozen=True)
class Mismatch:
    """One step of a distinguishing path: ``side`` moved and the other side could not follow."""

    side: str
    resource: Resource
    outer: tuple[Context, Context]
    inner: tuple[Context, Context]
    action: Action
    target: Context
    deeper: Optional["Mismatch"] = None

    def path(self) -> list["Mismatch"]:
        out = [self]
        while out[-1].deeper is not None:
            out.append(out[-1].deeper)
        return out

    def to_json(self) -> list[dict]:
        return [
            {
                "side": m.side,
                "resource": list(m.resource.atoms),
                "outer": [context_json(c) for c in m.outer],
                "inner": [context_json(c) for c in m.inner],
                "action": list(m.action.factors),
                "target": context_json(m.target),
            }
            for m in self.path()
        ]


@dataclass(frozen=True)
class EquivalenceVerdict:
    related: bool
    depth: int
    counterexample: Optional[Mismatch] = None
    reason: str = ""

    def __bool__(self):
        return self.related

    def to_json(self) -> dict:
        out: dict = {"related": self.related, "depth": self.depth}
        if self.counterexample is not None:
            out["counterexample"] = self.counterexample.to_json()
        if self.reason:
            out["reason"] = self.reason
        return out


class Bisimulation:
    """Level-wise refinement of bisimilarity over a universe, memoised."""

    def __init__(self, sem: Semantics, universe: ContextUniverse, extra: Iterable[Resource] = ()):
        if not universe.contexts:
            raise UsageError("bisimulation needs a nonempty context universe")
        self.sem = sem
        self.universe = universe
        self.fuel = universe.depth
        self.resources = universe.resources(sem, extra)
        self._memo: dict = {}
        self._pairs: dict = {}

    def _pairs_at(self, kind: str, k: int) -> list[tuple[Context, Context]]:
        key = (kind, k)
        if key in self._pairs:
            return self._pairs[key]
        pool = self.universe.outers if kind == "outer" else self.universe.inners
        pairs = [(c, c) for c in pool]
        if self.universe.cross_pairs and k > 0:
            for c1, c2 in itertools.combinations(pool, 2):
                if c1.resource == c2.resource and self.mismatch(c1.process, c2.process, k) is None:
                    pairs.append((c1, c2))
                    pairs.append((c2, c1))
        self._pairs[key] = pairs
        return pairs

    def _steps(self, R, E, outer, inner):
        return self.sem._steps(R, E, outer, inner, self.fuel)[0]

    def _defined(self, outer: Context, R: Resource, inner: Context) -> bool:
        # only worlds that exist are observed
        alg = self.sem.alg
        r = alg.compose(R, inner.resource)
        return r is not None and alg.compose(outer.resource, r) is not None

    def mismatch(self, e: Term, f: Term, k: int) -> Optional[Mismatch]:
        """``None`` when ``e`` and ``f`` are related at depth ``k``."""
        if k <= 0 or e == f:
            return None
        key = (e, f, k)
        if key in self._memo:
            return self._memo[key]
        self._memo[key] = None  # co-inductive assumption for re-entrant pairs
        result = self._refine(e, f, k)
        self._memo[key] = result
        self._memo[(f, e, k)] = _flip(result)
        return result

    def _refine(self, e: Term, f: Term, k: int) -> Optional[Mismatch]:
        outers = self._pairs_at("outer", k - 1)
        inners = self._pairs_at("inner", k - 1) if (e.is_open or f.is_open) else [(EMPTY_CONTEXT, EMPTY_CONTEXT)]
        for R in self.resources:
            for o1, o2 in outers:
                for i1, i2 in inners:
                    if not (self._defined(o1, R, i1) and self._defined(o2, R, i2)):
                        continue
                    te = self._steps(R, e, o1, i1)
                    tf = self._steps(R, f, o2, i2)
                    m = self._match(te, tf, k, "left", R, (o1, o2), (i1, i2))
                    if m is None:
                        m = self._match(tf, te, k, "right", R, (o1, o2), (i1, i2), flip=True)
                    if m is not None:
                        return m
        return None

    def _match(self, mine, theirs, k, side, R, outer, inner, flip=False):
        for a, r2, e2, _ in mine:
            deeper = None
            matched = False
            for b, s2, f2, _ in theirs:
                if b != a or s2 != r2:
                    continue
                m = self.mismatch(f2, e2, k - 1) if flip else self.mismatch(e2, f2, k - 1)
                if m is None:
                    matched = True
                    break
                if deeper is None:
                    deeper = m
            if not matched:
                return Mismatch(side, R, outer, inner, a, Context(r2, e2), deeper)
        return None


def _flip(m: Optional[Mismatch]) -> Optional[Mismatch]:
    if m is None:
        return None
    side = "right" if m.side == "left" else "left"
    return Mismatch(side, m.resource, (m.outer[1], m.outer[0]), (m.inner[1], m.inner[0]),
                    m.action, m.target, _flip(m.deeper))


def bisim(sem: Semantics, e: Term, f: Term, universe: ContextUniverse, depth: int,
          engine: Optional[Bisimulation] = None) -> EquivalenceVerdict:
    engine = engine or Bisimulation(sem, universe)
    m = engine.mismatch(e, f, depth)
    return EquivalenceVerdict(m is None, depth, m)


def bisim_contexts(sem: Semantics, c1: Context, c2: Context, universe: ContextUniverse, depth: int,
                   engine: Optional[Bisimulation] = None) -> EquivalenceVerdict:
    if c1.resource != c2.resource:
        return EquivalenceVerdict(False, depth, None, reason="resources differ")
    return bisim(sem, c1.process, c2.process, universe, depth, engine)


# --------------------------------------------------------------------------- local equivalence


@dataclass(frozen=True)
class Triple:
    outer: Context
    primary: Context
    inner: Context


class LocalEquivalence:
    """Bounded version of the triple relation that also demands equal primary resources."""

    def __init__(self, sem: Semantics, universe: ContextUniverse):
        self.sem = sem
        self.universe = universe
        self.fuel = universe.depth
        self._memo: dict = {}
        self._moves: dict = {}

    def moves(self, t: Triple) -> list[tuple[tuple[Action, Action, Action], Triple]]:
        hit = self._moves.get(t)
        if hit is not None:
            return hit
        sem = self.sem
        out = []
        ad = sem.plug(t.primary, t.inner)
        ca = sem.plug(t.outer, t.primary)
        if ad is not None and ca is not None:
            ta = sem.transitions(t.primary, t.outer, t.inner, self.fuel)
            tc = sem.transitions(t.outer, EMPTY_CONTEXT, ad, self.fuel)
            td = sem.transitions(t.inner, ca, EMPTY_CONTEXT, self.fuel)
            for x in ta:
                for y in tc:
                    for z in td:
                        out.append(((x.action, y.action, z.action), Triple(y.target, x.target, z.target)))
        self._moves[t] = out
        return out

    def related(self, t1: Triple, t2: Triple, k: int) -> bool:
        if t1.primary.resource != t2.primary.resource:
            return False
        if k <= 0 or t1 == t2:
            return True
        key = (t1, t2, k)
        if key in self._memo:
            return self._memo[key]
        self._memo[key] = True
        m1, m2 = self.moves(t1), self.moves(t2)
        ok = all(any(l2 == l1 and self.related(n1, n2, k - 1) for l2, n2 in m2) for l1, n1 in m1) and all(
            any(l1 == l2 and self.related(n1, n2, k - 1) for l1, n1 in m1) for l2, n2 in m2
        )
        self._memo[key] = ok
        self._memo[(t2, t1, k)] = ok
        return ok

    def related_pair(self, c1: Context, a: Context, c2: Context, b: Context, k: int) -> bool:
        """``C1, A ~loc C2, B``: related triples for every closed inner context of the universe."""
        for d in (UNIT_CONTEXT,) + self.universe.closed:
            if not self.related(Triple(c1, a, d), Triple(c2, b, d), k):
                return False
        return True


def local_equiv(sem: Semantics, c1: Context, a: Context, d1: Context, c2: Context, b: Context, d2: Context,
                universe: ContextUniverse, depth: int,
                engine: Optional[LocalEquivalence] = None) -> EquivalenceVerdict:
    engine = engine or LocalEquivalence(sem, universe)
    ok = engine.related(Triple(c1, a, d1), Triple(c2, b, d2), depth)
    reason = ""
    if not ok and a.resource != b.resource:
        reason = "primary resources differ"
    return EquivalenceVerdict(ok, depth, None, reason=reason)


def find_noncongruence(sem: Semantics, universe: ContextUniverse, depth: int,
                       candidates: Sequence[tuple[Context, Term, Term, Term]],
                       engine: Optional[LocalEquivalence] = None) -> Optional[tuple[Context, Term, Term, Term]]:
    """Search (outer, E, F, G) with E, F locally equivalent but E*G, F*G not.

    Each candidate carries its own outer context. ``E`` and ``F`` share a
    resource ``R``; ``G`` brings its own ``S`` so the products run at ``R o S``.
    """
    engine = engine or LocalEquivalence(sem, universe)
    resources = universe.resources(sem)
    for outer, e, f, g in candidates:
        for r in resources:
            a, b = Context(r, e), Context(r, f)
            if not engine.related_pair(outer, a, outer, b, depth):
                continue
            for s in resources:
                rs = sem.alg.compose(r, s)
                if rs is None:
                    continue
                ag, bg = Context(rs, Product(e, g)), Context(rs, Product(f, g))
                if not engine.related_pair(outer, ag, outer, bg, depth):
                    return outer, e, f, g
    return None


# --------------------------------------------------------------------------- utility obligations


@dataclass
class Report:
    checked: int = 0
    violations: list[dict] = field(default_factory=list)
    per_condition: dict[str, int] = field(default_factory=dict)

    @property
    def ok(self) -> bool:
        return not self.violations

    def to_json(self) -> dict:
        return {"ok": self.ok, "checked": self.checked, "per_condition": dict(sorted(self.per_condition.items())),
                "violations": self.violations}


def check_respects_bisim(sem: Semantics, u: UtilitySpec, universe: ContextUniverse, depth: int,
                         engine: Optional[Bisimulation] = None, tolerance: Optional[float] = None) -> Report:
    """Bisimilar closed contexts (universe members and table keys) must get equal utility."""
    report = Report()
    if u.is_neutral:
        return report
    engine = engine or Bisimulation(sem, universe, [c.resource for c, _ in u.table])
    pool = list(dict.fromkeys(universe.closed + tuple(c for c, _ in u.table if c.is_closed)))
    for c1, c2 in itertools.combinations(pool, 2):
        if c1.resource != c2.resource:
            continue
        report.checked += 1
        if engine.mismatch(c1.process, c2.process, depth) is not None:
            continue
        v1, v2 = world_value(u, c1), world_value(u, c2)
        if not close(v1, v2, tolerance):
            report.violations.append({"utility": u.name, "left": str(c1), "right": str(c2),
                                      "values": [str(v1), str(v2)]})
    return report


def _sum2(u: UtilitySpec, a: Term, b: Term) -> Term:
    return Sum(u.name, (a, b))


def check_accordance(sem: Semantics, us: Sequence[UtilitySpec], universe: ContextUniverse,
                     tolerance: Optional[float] = None, limit: Optional[int] = None) -> Report:
    """Instantiate the four accordance conditions over the universe and report failures.

    Wrappers range over C0 and the open universe members, resources over the
    resources of closed members, and E, F, G over closed member processes.
    ``limit`` caps the number of (E, F, G) triples per wrapper and resource.
    """
    report = Report(per_condition={"C1": 0, "C2": 0, "C3": 0, "C4": 0})
    wrappers = universe.outers
    resources = tuple(dict.fromkeys(c.resource for c in universe.closed)) or (EMPTY,)
    procs = universe.closed_processes()
    cache: dict = {}

    def val(u: UtilitySpec, c: Context, r: Resource, e: Term) -> Optional[Fraction]:
        key = (u.name, c, r, e)
        if key not in cache:
            world = sem.plug(c, Context(r, e))
            cache[key] = None if world is None else world_value(u, world)
        return cache[key]

    def le(x, y):
        return leq(x, y, tolerance)

    def note(cond: str, detail: dict):
        report.per_condition[cond] += 1
        report.violations.append({"condition": cond, **detail})

    triples = list(itertools.product(procs, repeat=3))
    if limit is not None:
        triples = triples[:limit]
    for u in us:
        for c in wrappers:
            for r in resources:
                for e in procs:
                    z, ve = val(u, c, r, ZERO), val(u, c, r, e)
                    if z is None or ve is None:
                        continue
                    report.checked += 1
                    if not le(z, ve):
                        note("C3", {"utility": u.name, "wrapper": str(c), "resource": str(r), "E": render(e),
                                    "values": [str(z), str(ve)]})
                for e, f, g in triples:
                    ve, vf, vg = val(u, c, r, e), val(u, c, r, f), val(u, c, r, g)
                    if ve is None or vf is None or vg is None:
                        continue
                    lhs = le(vf, ve) and le(vg, ve)
                    inst = {"utility": u.name, "wrapper": str(c), "resource": str(r),
                            "E": render(e), "F": render(f), "G": render(g)}
                    for v in us:
                        s = val(u, c, r, Sum(v.name, (f, g)))
                        if s is None:
                            continue
                        report.checked += 1
                        if lhs != le(s, ve):
                            note("C1", {**inst, "v": v.name})
                    s2 = val(u, c, r, _sum2(u, e, f))
                    if s2 is not None:
                        report.checked += 1
                        if lhs != le(vg, s2):
                            note("C2", inst)
                    # E, F, G are closed, so the inner context of condition 4 never reaches them
                    x = val(u, c, r, _sum2(u, Product(e, g), Product(f, g)))
                    y = val(u, c, r, Product(_sum2(u, e, f), g))
                    if x is not None and y is not None:
                        report.checked += 1
                        if not close(x, y, tolerance):
                            note("C4", {**inst, "values": [str(x), str(y)]})
    return report


__all__ = [
    "Bisimulation", "ContextUniverse", "EquivalenceVerdict", "LocalEquivalence", "Mismatch", "Report",
    "Triple", "bisim", "bisim_contexts", "check_accordance", "check_respects_bisim", "find_noncongruence",
    "local_equiv", "ONE",
]
