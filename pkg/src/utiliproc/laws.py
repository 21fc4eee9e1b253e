"""The algebraic laws of choice and product, checked as bounded bisimilarity facts,
plus sampled congruence and logical-invariance checks."""
from __future__ import annotations

import itertools
import random
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

from .equivalence import Bisimulation, ContextUniverse
from .formula import TRUE, FALSE, And, Box, Diamond, Formula, Not
from .kernel import HOLE, ONE, UNIT_ACTION, ZERO, Action, Context, Prefix, Product, Sum, Term, substitute
from .logic import CheckConfig, Checker
from .semantics import Semantics

LAW_DEPTH = 4


@dataclass(frozen=True)
class Law:
    number: int
    name: str
    arity: int
    uses_utility: bool
    sides: Callable[[Optional[str], Term, Term, Term], tuple[Term, Term]]


def _s(u, *bs):
    return Sum(u, tuple(bs))


LAWS: tuple[Law, ...] = (
    Law(1, "sum-commutative", 2, True, lambda u, e, f, g: (_s(u, e, f), _s(u, f, e))),
    Law(2, "sum-associative", 3, True, lambda u, e, f, g: (_s(u, e, _s(u, f, g)), _s(u, _s(u, e, f), g))),
    Law(3, "sum-unit", 1, True, lambda u, e, f, g: (_s(u, e, ZERO), e)),
    Law(4, "product-annihilator", 1, False, lambda u, e, f, g: (Product(e, ZERO), ZERO)),
    Law(5, "unit-product", 1, False, lambda u, e, f, g: (Product(e, ONE), e)),
    Law(6, "product-commutative", 2, False, lambda u, e, f, g: (Product(e, f), Product(f, e))),
    Law(7, "product-associative", 3, False,
        lambda u, e, f, g: (Product(e, Product(f, g)), Product(Product(e, f), g))),
    Law(8, "distributive", 3, True,
        lambda u, e, f, g: (Product(_s(u, e, f), g), _s(u, Product(e, g), Product(f, g)))),
)

LAWS_BY_NAME = {law.name: law for law in LAWS}


@dataclass
class LawResult:
    law: Law
    checked: int = 0
    failures: list[dict] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.failures

    def to_json(self) -> dict:
        return {"law": self.law.number, "name": self.law.name, "ok": self.ok, "checked": self.checked,
                "failures": self.failures}


def law_terms(universe: ContextUniverse, limit: int) -> list[Term]:
    """Distinct closed processes of the universe, in universe order, excluding 0."""
    return [t for t in universe.closed_processes() if t != ZERO][:limit]


def run_laws(sem: Semantics, universe: ContextUniverse, utilities: Sequence[Optional[str]],
             depth: int = LAW_DEPTH, terms: Optional[Sequence[Term]] = None, term_limit: int = 4,
             laws: Sequence[Law] = LAWS, engine: Optional[Bisimulation] = None) -> list[LawResult]:
    """Every law over every tuple of ``terms`` and every utility name (``None`` is plain choice)."""
    engine = engine or Bisimulation(sem, universe)
    terms = list(terms) if terms is not None else law_terms(universe, term_limit)
    out = []
    for law in laws:
        res = LawResult(law)
        us = list(utilities) if law.uses_utility else [None]
        for u in us:
            for combo in itertools.product(terms, repeat=law.arity):
                e, f, g = (tuple(combo) + (ONE, ONE))[:3]
                left, right = law.sides(u, e, f, g)
                res.checked += 1
                m = engine.mismatch(left, right, depth)
                if m is not None:
                    res.failures.append({"utility": u, "left": str(left), "right": str(right),
                                         "counterexample": m.to_json()})
        out.append(res)
    return out


# --------------------------------------------------------------------------- sampled properties


@dataclass
class SampleReport:
    checked: int = 0
    counterexamples: list[dict] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.counterexamples

    def to_json(self) -> dict:
        return {"ok": self.ok, "checked": self.checked, "counterexamples": self.counterexamples}


def related_pairs(sem: Semantics, universe: ContextUniverse, utilities: Sequence[Optional[str]], count: int,
                  rng: random.Random, depth: int, engine: Bisimulation, terms: Sequence[Term]) -> list[tuple[Term, Term]]:
    """``count`` distinct pairs related at ``depth``, drawn from law instances and universe members."""
    pairs: list[tuple[Term, Term]] = []
    seen = set()
    attempts = 0
    while len(pairs) < count and attempts < 50 * count:
        attempts += 1
        law = rng.choice(LAWS)
        u = rng.choice(list(utilities)) if law.uses_utility else None
        e, f, g = (rng.choice(terms) for _ in range(3))
        left, right = law.sides(u, e, f, g)
        if rng.random() < 0.5:
            left, right = right, left
        if (left, right) in seen:
            continue
        seen.add((left, right))
        if engine.mismatch(left, right, depth) is None:
            pairs.append((left, right))
    return pairs


def congruence_sampling(sem: Semantics, universe: ContextUniverse, utilities: Sequence[Optional[str]],
                        actions: Sequence[Action], samples: int = 100, depth: int = 3, seed: int = 0,
                        term_limit: int = 6) -> SampleReport:
    """Related pairs stay related under prefixing, product, choice and substitution into a wrapper."""
    rng = random.Random(seed)
    engine = Bisimulation(sem, universe)
    terms = law_terms(universe, term_limit)
    wrappers = [c.process for c in universe.open if c.process.holes == 1] or [Product(terms[0], HOLE)]
    report = SampleReport()
    for e, f in related_pairs(sem, universe, utilities, samples, rng, depth, engine, terms):
        a = rng.choice(list(actions))
        g = rng.choice(terms)
        u = rng.choice(list(utilities))
        w = rng.choice(wrappers)
        cases = {
            "prefix": (Prefix(a, e), Prefix(a, f)),
            "product": (Product(e, g), Product(f, g)),
            "choice": (Sum(u, (e, g)), Sum(u, (f, g))),
            "substitution": (substitute(w, e), substitute(w, f)),
        }
        for kind, (x, y) in cases.items():
            report.checked += 1
            m = engine.mismatch(x, y, depth)
            if m is not None:
                report.counterexamples.append({"kind": kind, "left": str(x), "right": str(y),
                                               "counterexample": m.to_json()})
    return report


def formula_templates(actions: Sequence[Action]) -> list[Formula]:
    """Five shapes of modal depth at most two, instantiated over every action pair."""
    out: list[Formula] = []
    for a, b in itertools.product(actions, repeat=2):
        out.extend([
            Diamond(a, TRUE),
            Box(a, FALSE),
            Diamond(a, Diamond(b, TRUE)),
            Box(a, Diamond(b, TRUE)),
            And(Diamond(a, TRUE), Not(Diamond(b, TRUE))),
        ])
    return list(dict.fromkeys(out))


def invariance_sampling(sem: Semantics, universe: ContextUniverse, utilities: Sequence[Optional[str]],
                        actions: Sequence[Action], samples: int = 50, depth: int = 3, seed: int = 0,
                        term_limit: int = 6) -> SampleReport:
    """Bisimilar primaries in the same surrounding satisfy the same template formulas."""
    rng = random.Random(seed)
    engine = Bisimulation(sem, universe)
    terms = law_terms(universe, term_limit)
    resources = sorted({c.resource for c in universe.closed})
    surroundings = list(universe.outers)
    checker = Checker(sem, CheckConfig(universe, depth))
    formulas = formula_templates(list(actions) + [UNIT_ACTION])
    report = SampleReport()
    for e, f in related_pairs(sem, universe, utilities, samples, rng, depth, engine, terms):
        r = rng.choice(resources)
        s = rng.choice(surroundings)
        if sem.plug(s, Context(r, e)) is None:
            s = surroundings[0]
        c1, c2 = Context(r, e), Context(r, f)
        for phi in formulas:
            report.checked += 1
            v1, v2 = bool(checker.eval(c1, s, phi)), bool(checker.eval(c2, s, phi))
            if v1 != v2:
                report.counterexamples.append({"formula": str(phi), "left": str(c1), "right": str(c2),
                                               "surrounding": str(s), "verdicts": [v1, v2]})
    return report


__all__ = ["LAWS", "LAWS_BY_NAME", "LAW_DEPTH", "Law", "LawResult", "SampleReport", "congruence_sampling",
           "formula_templates", "invariance_sampling", "law_terms", "related_pairs", "run_laws"]
