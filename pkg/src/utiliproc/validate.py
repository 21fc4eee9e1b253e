"""Model validation: algebraic laws, term shape, and the obligations on utilities and valuations.

Error codes block execution; warning codes flag models for which the
equational results no longer apply.
"""
from __future__ import annotations

import itertools
from typing import Optional

from .equivalence import ContextUniverse, check_accordance, check_respects_bisim
from .kernel import (
    EMPTY,
    Action,
    HomomorphismError,
    Prefix,
    Resource,
    subterms,
    well_formed,
)
from .logic import Valuation, check_valuation
from .model import ERROR, WARNING, Diagnostic, Model
from .modelfile import _unguarded_consts
from .universes import build_universe

VALIDATION_DEPTH = 4
POOL_LIMIT = 256


class _Collector:
    def __init__(self, m: Model):
        self.m = m
        self.out: list[Diagnostic] = []
        self._seen: set = set()

    def add(self, severity: str, code: str, key: str, message: str) -> None:
        line, col = self.m.location(key)
        d = Diagnostic(line, col, severity, code, message)
        if d not in self._seen:
            self._seen.add(d)
            self.out.append(d)


def _resource_pool(m: Model, universe: Optional[ContextUniverse]) -> list[Resource]:
    alg = m.algebra
    found: dict[Resource, None] = {EMPTY: None}
    for r in m.resources.values():
        found.setdefault(r, None)
    for (_, r), s in m.overrides.items():
        found.setdefault(r, None)
        found.setdefault(s, None)
    if universe is not None:
        for c in universe.contexts:
            found.setdefault(c.resource, None)
    for u in m.utilities.values():
        for c, _ in u.table:
            found.setdefault(c.resource, None)
    return [r for r in found if alg.within_capacity(r)]


def _check_resources(col: _Collector, m: Model) -> None:
    alg = m.algebra
    for name, r in m.resources.items():
        if not alg.within_capacity(r):
            col.add(ERROR, "CAPACITY", f"resource:{name}", f"resource {name} = {r} exceeds atom capacity")


def _check_monoid(col: _Collector, m: Model, pool: list[Resource]) -> None:
    alg = m.algebra
    small = pool[:24]
    for r in small:
        if alg.compose(r, EMPTY) != r or alg.compose(EMPTY, r) != r:
            col.add(ERROR, "MONOID_LAW", "", f"e is not a unit for {r}")
        if alg.mu(Action(()), r) != r:
            col.add(ERROR, "MONOID_LAW", "", f"mu(1, {r}) differs from {r}")
    for r, s in itertools.product(small, repeat=2):
        if alg.compose(r, s) != alg.compose(s, r):
            col.add(ERROR, "MONOID_LAW", "", f"composition of {r} and {s} is not commutative")
    for r, s, t in itertools.product(small[:10], repeat=3):
        rs, st = alg.compose(r, s), alg.compose(s, t)
        left = None if rs is None else alg.compose(rs, t)
        right = None if st is None else alg.compose(r, st)
        if left != right:
            col.add(ERROR, "MONOID_LAW", "", f"composition of {r}, {s}, {t} is not associative")


def _check_mu(col: _Collector, m: Model) -> None:
    alg = m.algebra
    full = alg.full()
    frames = alg.subresources(full) if len(alg.subresources(full)) <= POOL_LIMIT else []
    for (a, r), s in m.overrides.items():
        key = f"mu:{a}:{r}"
        if not (alg.within_capacity(r) and alg.within_capacity(s)):
            col.add(ERROR, "CAPACITY", key, f"mu {a} {r} -> {s} exceeds atom capacity")
            continue
        need = alg.rho(a)
        if len(a.factors) > 1:
            if need is None or alg.difference(r, need) is None:
                col.add(ERROR, "MU_OVERLAP", key,
                        f"mu {a} {r}: {r} cannot be split into disjoint requirements of the factors of {a}")
                continue
            results = alg._mu_results(a, r)
            if results and results != {s}:
                col.add(ERROR, "MU_HOMOMORPHISM", key,
                        f"mu {a} {r} = {s} but the factors give {', '.join(str(x) for x in sorted(results))}")
            continue
        if alg.difference(r, need) is None:
            col.add(ERROR, "MU_RHO", key, f"mu {a} {r}: {r} lacks the requirement {need} of {a}")
            continue
        for extra in frames:
            if extra.is_unit:
                continue
            bigger = alg.compose(r, extra)
            framed = alg.compose(s, extra)
            if bigger is None or framed is None:
                continue
            got = alg.mu(a, bigger)
            if got is not None and got != framed:
                col.add(ERROR, "MU_HOMOMORPHISM", key,
                        f"mu({a}, {bigger}) = {got} but mu({a}, {r}) framed by {extra} gives {framed}")
                break
        # and against the frame rule from below
        for smaller, extra in alg.splits(r):
            if extra.is_unit or alg.difference(smaller, need) is None:
                continue
            base = alg.mu(a, smaller)
            framed = None if base is None else alg.compose(base, extra)
            if framed is not None and framed != s:
                col.add(ERROR, "MU_HOMOMORPHISM", key,
                        f"mu({a}, {r}) = {s} but mu({a}, {smaller}) framed by {extra} gives {framed}")
                break
    names = list(m.actions)
    composites = {Action.of(a, b) for a, b in itertools.combinations_with_replacement(names, 2)}
    for body in m.processes.values():
        for t in subterms(body):
            if isinstance(t, Prefix) and len(t.action.factors) > 1:
                composites.add(t.action)
    for a in sorted(composites, key=str):
        for r in frames:
            try:
                alg.mu(a, r)
            except HomomorphismError as exc:
                col.add(ERROR, "MU_HOMOMORPHISM", "", str(exc))
                break


def _check_terms(col: _Collector, m: Model) -> None:
    for name, body in m.processes.items():
        wf = well_formed(body)
        if not wf:
            col.add(ERROR, "ILL_FORMED", f"process:{name}", f"process {name} is ill formed: {wf.reason}")
    for u in m.utilities.values():
        for c, _ in u.table:
            if c.is_open:
                col.add(ERROR, "ILL_FORMED", f"utility:{u.name}", f"utility {u.name} has open key {c}")
    for name, cs in m.atomprops.items():
        for c in cs:
            if c.is_open:
                col.add(ERROR, "ILL_FORMED", f"atomprop:{name}", f"proposition {name} has open member {c}")
    for uname, decl in m.universes.items():
        for c in decl.contexts:
            if not well_formed(c.process):
                col.add(ERROR, "ILL_FORMED", f"universe:{uname}", f"universe {uname} has ill-formed member {c}")


def unguarded_cycles(m: Model) -> list[list[str]]:
    """Cycles of process names that reach themselves without passing a prefix."""
    graph = {n: sorted(set(c for c in _unguarded_consts(b) if c in m.processes)) for n, b in m.processes.items()}
    cycles, seen = [], set()
    for start in m.processes:
        stack = [(start, [start])]
        while stack:
            node, path = stack.pop()
            for nxt in graph[node]:
                if nxt == start:
                    key = frozenset(path)
                    if key not in seen:
                        seen.add(key)
                        cycles.append(path)
                elif nxt not in path:
                    stack.append((nxt, path + [nxt]))
    return cycles


def _check_guards(col: _Collector, m: Model) -> None:
    for cycle in unguarded_cycles(m):
        col.add(ERROR, "UNGUARDED_RECURSION", f"process:{cycle[0]}",
                "unguarded recursion through " + " -> ".join(cycle + [cycle[0]]))


def _check_obligations(col: _Collector, m: Model, universe: ContextUniverse, depth: int) -> None:
    sem = m.semantics()
    for u in m.utilities.values():
        rep = check_respects_bisim(sem, u, universe, depth)
        for v in rep.violations:
            col.add(WARNING, "NOT_RESPECTS_BISIM", f"utility:{u.name}",
                    f"utility {u.name} separates bisimilar {v['left']} and {v['right']} ({v['values'][0]} vs {v['values'][1]})")
    if m.utilities:
        rep = check_accordance(sem, list(m.utilities.values()), universe)
        for v in rep.violations:
            col.add(WARNING, f"ACCORDANCE_{v['condition']}", f"utility:{v['utility']}",
                    f"utility {v['utility']} breaks accordance condition {v['condition'][1]} "
                    f"in {v['wrapper']} at {v['resource']} with E = {v['E']}")
    if m.atomprops:
        rep = check_valuation(sem, Valuation.of(m.atomprops), universe, depth)
        for v in rep.violations:
            col.add(ERROR, "VALUATION_NOT_CLOSED", f"atomprop:{v['atom']}",
                    f"proposition {v['atom']} contains {v['member']} but not the bisimilar {v['missing']}")


def validate_model(m: Model, depth: int = VALIDATION_DEPTH, universe: Optional[ContextUniverse] = None,
                   obligations: bool = True) -> list[Diagnostic]:
    """All diagnostics, parser warnings included, ordered by location."""
    col = _Collector(m)
    for d in m.diagnostics:
        col.out.append(d)
    _check_resources(col, m)
    _check_terms(col, m)
    _check_guards(col, m)
    structural_errors = any(d.severity == ERROR for d in col.out)
    _check_mu(col, m)
    if universe is None and not structural_errors:
        universe = build_universe(m)
    _check_monoid(col, m, _resource_pool(m, universe))
    if obligations and universe is not None and not any(d.severity == ERROR for d in col.out):
        _check_obligations(col, m, universe, depth)
    return sorted(col.out)


def errors(diags: list[Diagnostic]) -> list[Diagnostic]:
    return [d for d in diags if d.severity == ERROR]


__all__ = ["VALIDATION_DEPTH", "errors", "unguarded_cycles", "validate_model"]
