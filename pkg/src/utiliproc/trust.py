"""Trace costs and trust domains: which surroundings let an agent reach a property cheaply enough."""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Optional, Sequence

from .formula import TRUE, Formula, needs_universe
from .kernel import Action, Context, UsageError, well_formed
from .logic import CheckConfig, Checker
from .model import CostSpec
from .semantics import DEFAULT_DEPTH, Semantics

DEFAULT_LENGTH = 4


def trace_cost(k: CostSpec, trace: Iterable[Action]) -> Fraction:
    return sum((k.cost(a) for a in trace), Fraction(0))


@dataclass(frozen=True)
class TrustDomainQuery:
    agent: Context
    formula: Formula
    cost: CostSpec
    bound: Fraction
    candidates: tuple[Context, ...]
    length: int = DEFAULT_LENGTH
    depth: int = DEFAULT_DEPTH


@dataclass(frozen=True)
class Membership:
    index: int
    candidate: Context
    member: bool
    trace: tuple[Action, ...] = ()
    cost: Optional[Fraction] = None
    final: Optional[tuple[Context, Context]] = None
    reason: str = ""

    def to_json(self) -> dict:
        out: dict = {"candidate": str(self.candidate), "member": self.member}
        if self.member:
            out["trace"] = [list(a.factors) for a in self.trace]
            out["cost"] = str(self.cost)
            out["final"] = {"primary": str(self.final[0]), "surrounding": str(self.final[1])}
        if self.reason:
            out["reason"] = self.reason
        return out


def _check_candidate(c: Context) -> None:
    wf = well_formed(c.process)
    if not wf or c.process.holes != 1:
        raise UsageError(f"candidate {c} must be well formed with exactly one hole")


def _search(sem: Semantics, checker: Checker, q: TrustDomainQuery, candidate: Context, index: int) -> Membership:
    if sem.plug(candidate, q.agent) is None:
        return Membership(index, candidate, False, reason="agent does not fit the candidate's resources")
    k = q.cost
    monotone = all(v >= 0 for _, v in k.per_action)

    def walk(p: Context, s: Context, trace: tuple[Action, ...], spent: Fraction) -> Optional[Membership]:
        if spent <= q.bound and checker.eval(p, s, q.formula):
            return Membership(index, candidate, True, trace, spent, (p, s))
        if len(trace) >= q.length:
            return None
        moves = {}
        for pt, st in sem.joint_step(p, s, q.depth):
            moves.setdefault((str(pt.action), str(pt.target), str(st.target)), (pt, st))
        for key in sorted(moves):
            pt, st = moves[key]
            cost = spent + k.cost(pt.action)
            if monotone and cost > q.bound:
                continue
            found = walk(pt.target, st.target, trace + (pt.action,), cost)
            if found is not None:
                return found
        return None

    found = walk(q.agent, candidate, (), Fraction(0))
    if found is None:
        return Membership(index, candidate, False, reason=f"no qualifying trace of length <= {q.length}")
    replay = sem.derive_trace(q.agent, candidate, found.trace, q.depth)
    if not replay.ok or found.cost > q.bound:
        raise AssertionError(f"witness for {candidate} does not replay")
    return found


def trust_domain(sem: Semantics, q: TrustDomainQuery, cfg: CheckConfig = CheckConfig()) -> list[Membership]:
    """Verdict per candidate, in candidate order; members carry the lexicographically first witness."""
    if q.agent.is_open:
        raise UsageError("the agent context must be closed")
    for c in q.candidates:
        _check_candidate(c)
    if needs_universe(q.formula) and not cfg.universe.contexts:
        raise UsageError("formula uses -*, * or a preference modality but the universe is empty")
    checker = Checker(sem, cfg)
    return [_search(sem, checker, q, c, i) for i, c in enumerate(q.candidates)]


def members(results: Sequence[Membership]) -> tuple[Context, ...]:
    return tuple(m.candidate for m in results if m.member)


def iso_cost_frontier(sem: Semantics, agent: Context, cost: CostSpec, candidates: Sequence[Context],
                      levels: Sequence[Fraction], length: int = DEFAULT_LENGTH,
                      cfg: CheckConfig = CheckConfig(), depth: int = DEFAULT_DEPTH,
                      formula: Formula = TRUE) -> dict[Fraction, tuple[Context, ...]]:
    """Trust domain at each cost level; ``formula`` defaults to true."""
    if list(levels) != sorted(levels):
        raise UsageError("cost levels must be ascending")
    out = {}
    for level in levels:
        q = TrustDomainQuery(agent, formula, cost, Fraction(level), tuple(candidates), length, depth)
        out[level] = members(trust_domain(sem, q, cfg))
    return out


__all__ = ["CostSpec", "DEFAULT_LENGTH", "Membership", "TrustDomainQuery", "iso_cost_frontier", "members",
           "trace_cost", "trust_domain"]
