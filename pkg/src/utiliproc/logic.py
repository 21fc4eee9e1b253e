"""Satisfaction of formulas by a primary context placed in a surrounding context."""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Mapping, Optional

from .equivalence import Bisimulation, ContextUniverse, LocalEquivalence, Report
from .formula import (
    And,
    Atom,
    Bottom,
    Box,
    Diamond,
    Formula,
    Implies,
    MultUnit,
    Not,
    Or,
    PrefBox,
    PrefDiamond,
    Star,
    Top,
    Wand,
    needs_universe,
    security_level,
)
from .kernel import (
    EMPTY,
    HOLE,
    ONE,
    Action,
    Context,
    ModelError,
    Product,
    Resource,
    UsageError,
    canonicalize,
    factors_of,
    leq,
    product,
    world_value,
)
from .semantics import DEFAULT_DEPTH, Semantics

GLOBAL = "global"
LOCAL = "local"


@dataclass(frozen=True)
class Valuation:
    """Atomic propositions as sets of closed contexts, compared in canonical form."""

    atoms: Mapping[str, frozenset[Context]] = field(default_factory=dict)

    @classmethod
    def of(cls, table: Mapping[str, tuple[Context, ...]]) -> "Valuation":
        return cls({p: frozenset(c.canonical() for c in cs) for p, cs in table.items()})

    def holds(self, p: str, c: Context) -> bool:
        try:
            members = self.atoms[p]
        except KeyError:
            raise ModelError(f"undeclared atomic proposition {p!r}") from None
        return c.canonical() in members


@dataclass(frozen=True)
class CheckConfig:
    universe: ContextUniverse = ContextUniverse(())
    depth: int = DEFAULT_DEPTH
    mode: str = GLOBAL
    valuation: Valuation = Valuation()

    def __post_init__(self):
        if self.mode not in (GLOBAL, LOCAL):
            raise UsageError(f"mode must be {GLOBAL!r} or {LOCAL!r}, not {self.mode!r}")


@dataclass(frozen=True)
class Verdict:
    holds: bool
    witness: tuple[str, ...] = ()

    def __bool__(self):
        return self.holds

    def to_json(self) -> dict:
        return {"holds": self.holds, "witness": list(self.witness)}


class Checker:
    """Memoised evaluation of one configuration; reusable across formulas."""

    def __init__(self, sem: Semantics, cfg: CheckConfig):
        self.sem = sem
        self.cfg = cfg
        self.alg = sem.alg
        self._memo: dict = {}
        self._bisim: Optional[Bisimulation] = None
        self._local: Optional[LocalEquivalence] = None

    @property
    def bisim(self) -> Bisimulation:
        if self._bisim is None:
            universe = self.cfg.universe
            if not universe.contexts:
                universe = universe.with_contexts([Context(EMPTY, ONE)])
            self._bisim = Bisimulation(self.sem, universe)
        return self._bisim

    @property
    def local(self) -> LocalEquivalence:
        if self._local is None:
            self._local = LocalEquivalence(self.sem, self.cfg.universe)
        return self._local

    def check(self, primary: Context, surrounding: Context, phi: Formula) -> Verdict:
        if primary.is_open:
            raise UsageError(f"primary context {primary} must be closed")
        if needs_universe(phi) and not self.cfg.universe.contexts:
            raise UsageError("formula uses -*, * or a preference modality but the universe is empty")
        return self.eval(primary, surrounding, phi)

    def eval(self, c: Context, s: Context, phi: Formula) -> Verdict:
        key = (c, s, phi)
        hit = self._memo.get(key)
        if hit is None:
            hit = self._eval(c, s, phi)
            self._memo[key] = hit
        return hit

    def _eval(self, c: Context, s: Context, phi: Formula) -> Verdict:
        if isinstance(phi, Top):
            return Verdict(True)
        if isinstance(phi, Bottom):
            return Verdict(False)
        if isinstance(phi, Atom):
            world = self.sem.plug(s, c)
            return Verdict(world is not None and self.cfg.valuation.holds(phi.name, world))
        if isinstance(phi, Not):
            return Verdict(not self.eval(c, s, phi.body))
        if isinstance(phi, And):
            return Verdict(bool(self.eval(c, s, phi.left)) and bool(self.eval(c, s, phi.right)))
        if isinstance(phi, Or):
            return Verdict(bool(self.eval(c, s, phi.left)) or bool(self.eval(c, s, phi.right)))
        if isinstance(phi, Implies):
            return Verdict(not self.eval(c, s, phi.left) or bool(self.eval(c, s, phi.right)))
        if isinstance(phi, (Diamond, Box)):
            return self._modal(c, s, phi)
        if isinstance(phi, MultUnit):
            return self._unit(c, s)
        if isinstance(phi, Star):
            return self._star(c, s, phi)
        if isinstance(phi, Wand):
            return self._wand(c, s, phi)
        if isinstance(phi, (PrefBox, PrefDiamond)):
            return self._pref(c, s, phi)
        raise TypeError(phi)

    def _modal(self, c: Context, s: Context, phi) -> Verdict:
        pairs = [(p, q) for p, q in self.sem.joint_step(c, s, self.cfg.depth) if p.action == phi.action]
        want = isinstance(phi, Diamond)
        for p, q in pairs:
            if bool(self.eval(p.target, q.target, phi.body)) == want:
                return Verdict(want, (f"{p.action} -> {p.target} under {q.target} via {q.action}",))
        return Verdict(not want, () if pairs else (f"no {phi.action} step",))

    def _unit(self, c: Context, s: Context) -> Verdict:
        if c.resource != EMPTY:
            return Verdict(False, ("resource is not e",))
        if self.cfg.mode == LOCAL:
            return Verdict(self.local.related_pair(s, c, s, Context(EMPTY, ONE), self.cfg.depth))
        return Verdict(self.bisim.mismatch(c.process, ONE, self.cfg.depth) is None)

    def decompositions(self, c: Context):
        """Candidate (S, F, T, G) with S o T = R and F x G equivalent to E."""
        alg = self.alg
        factors = factors_of(canonicalize(c.process))
        seen = set()
        splits = []
        for mask in itertools.product((0, 1), repeat=len(factors)):
            f = product(*[x for x, m in zip(factors, mask) if m == 0]) if 0 in mask else ONE
            g = product(*[x for x, m in zip(factors, mask) if m == 1]) if 1 in mask else ONE
            if (f, g) not in seen:
                seen.add((f, g))
                splits.append((f, g))
        for extra in ((c.process, ONE), (ONE, c.process)):
            if extra not in seen:
                seen.add(extra)
                splits.append(extra)
        for s_res, t_res in alg.splits(c.resource):
            for f, g in splits:
                yield s_res, f, t_res, g

    def _star(self, c: Context, s: Context, phi: Star) -> Verdict:
        for s_res, f, t_res, g in self.decompositions(c):
            if self.cfg.mode == LOCAL:
                whole = Context(c.resource, Product(f, g))
                if not self.local.related_pair(s, c, s, whole, self.cfg.depth):
                    continue
            left_env = self.sem.plug(s, Context(t_res, Product(HOLE, g)))
            right_env = self.sem.plug(s, Context(s_res, Product(f, HOLE)))
            if left_env is None or right_env is None:
                continue
            if self.eval(Context(s_res, f), left_env, phi.left) and self.eval(Context(t_res, g), right_env, phi.right):
                return Verdict(True, (f"split {Context(s_res, f)} * {Context(t_res, g)}",))
        return Verdict(False)

    def _wand(self, c: Context, s: Context, phi: Wand) -> Verdict:
        for other in self.cfg.universe.closed:
            r = self.alg.compose(c.resource, other.resource)
            if r is None or not self.eval(other, s, phi.left):
                continue
            if not self.eval(Context(r, Product(c.process, other.process)), s, phi.right):
                return Verdict(False, (f"counterexample {other}",))
        return Verdict(True)

    def _pref(self, c: Context, s: Context, phi) -> Verdict:
        u = self.sem.utility(phi.utility)
        here = self.sem.plug(s, c)
        if u is None or here is None:
            base = None
        else:
            base = world_value(u, here)
        want_all = isinstance(phi, PrefBox)
        for other in dict.fromkeys(self.cfg.universe.closed + (c,)):
            world = self.sem.plug(s, other)
            if world is None:
                continue
            if u is not None and base is not None and not leq(base, world_value(u, world), self.sem.tolerance):
                continue
            ok = bool(self.eval(other, s, phi.body))
            if want_all and not ok:
                return Verdict(False, (f"preferred {other} fails",))
            if not want_all and ok:
                return Verdict(True, (f"preferred {other}",))
        return Verdict(want_all)


def satisfies(sem: Semantics, primary: Context, surrounding: Context, phi: Formula,
              cfg: CheckConfig = CheckConfig()) -> Verdict:
    return Checker(sem, cfg).check(primary, surrounding, phi)


def security_level_query(sem: Semantics, primary: Context, surrounding: Context, defence: Action,
                         attacker: Formula, utility: str, attack: Action, cfg: CheckConfig) -> Verdict:
    return satisfies(sem, primary, surrounding, security_level(defence, attacker, utility, attack), cfg)


def check_valuation(sem: Semantics, v: Valuation, universe: ContextUniverse, depth: int) -> Report:
    """Every universe or member context bisimilar to a member must be a member."""
    report = Report()
    if not v.atoms:
        return report
    members = {c for cs in v.atoms.values() for c in cs}
    engine = Bisimulation(sem, universe.with_contexts(sorted(members)) if not universe.contexts else universe,
                          [c.resource for c in members])
    pool = list(dict.fromkeys([c.canonical() for c in universe.closed] + sorted(members)))
    for p, cs in sorted(v.atoms.items()):
        for m in sorted(cs):
            for other in pool:
                if other in cs or other.resource != m.resource:
                    continue
                report.checked += 1
                if engine.mismatch(m.process, other.process, depth) is None:
                    report.violations.append({"atom": p, "member": str(m), "missing": str(other)})
    return report


__all__ = ["CheckConfig", "Checker", "GLOBAL", "LOCAL", "Valuation", "Verdict", "check_valuation",
           "satisfies", "security_level_query", "Resource"]
