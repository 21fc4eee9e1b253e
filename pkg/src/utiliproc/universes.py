"""Building context universes from a model's declarations."""
from __future__ import annotations

import itertools
from typing import Optional

from .equivalence import ContextUniverse
from .kernel import EMPTY, ONE, ZERO, Const, Context, Resource, Term, UsageError
from .model import Model
from .modelfile import process_subterms

AUTO_SIZE = 30
AUTO_DEPTH = 6


def resource_pool(m: Model, seeds: tuple[Context, ...] = ()) -> list[Resource]:
    alg = m.algebra
    base: dict[Resource, None] = {EMPTY: None}
    for r in m.resources.values():
        base.setdefault(r, None)
    for c in seeds:
        base.setdefault(c.resource, None)
    for q in m.queries.values():
        for _, v in q.fields:
            if isinstance(v, Context):
                base.setdefault(v.resource, None)
    pool = dict(base)
    for r, s in itertools.combinations(list(base), 2):
        t = alg.compose(r, s)
        if t is not None:
            pool.setdefault(t, None)
    return list(pool)


def term_pool(m: Model) -> list[Term]:
    out: dict[Term, None] = {}
    for name in m.processes:
        out[Const(name)] = None
    for t in process_subterms(m):
        if t.is_closed and t != ZERO:
            out.setdefault(t, None)
    out.setdefault(ONE, None)
    return list(out)


def generate(m: Model, seeds: tuple[Context, ...], size: int) -> tuple[Context, ...]:
    """Seeds first, then closed (resource, term) pairs in diagonal order until ``size`` is reached."""
    out: dict[Context, None] = dict.fromkeys(seeds)
    terms, resources = term_pool(m), resource_pool(m, seeds)
    pairs = sorted(itertools.product(range(len(terms)), range(len(resources))), key=lambda p: (p[0] + p[1], p[0]))
    for i, j in pairs:
        if len(out) >= size:
            break
        out.setdefault(Context(resources[j], terms[i]), None)
    return tuple(out)


def build_universe(m: Model, name: Optional[str] = None, depth: Optional[int] = None) -> ContextUniverse:
    """The named universe, the only declared one, or an automatically generated one."""
    if name is not None:
        try:
            decl = m.universes[name]
        except KeyError:
            raise UsageError(f"no universe named {name!r}") from None
    elif m.universes:
        decl = next(iter(m.universes.values()))
    else:
        return ContextUniverse(generate(m, (), AUTO_SIZE), depth or AUTO_DEPTH)
    contexts = decl.contexts
    if decl.generate is not None:
        contexts = generate(m, contexts, decl.generate)
    return ContextUniverse(contexts, depth or decl.depth or AUTO_DEPTH)
