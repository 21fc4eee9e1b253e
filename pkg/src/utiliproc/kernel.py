"""Core algebra: resources, actions, modification functions, process terms and contexts.

Everything here is immutable once a model is loaded. Resources are finite
multisets of declared atoms with per-atom capacities; actions are finite
multisets of atomic action names.
"""
from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, fields
from fractions import Fraction
from functools import cached_property, lru_cache
from typing import Iterable, Iterator, Optional, Union

from . import _kernels


class ModelError(Exception):
    """A reference to something the model does not declare, or an inconsistent table."""


class UsageError(Exception):
    """An operation was called outside its domain (e.g. utility of an open context)."""


class HomomorphismError(ModelError):
    """Two decompositions of a composite action disagree on the modified resource."""


# --------------------------------------------------------------------------- resources


@dataclass(frozen=True, order=True)
class Resource:
    atoms: tuple[str, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "atoms", tuple(sorted(self.atoms)))

    @classmethod
    def of(cls, *names: str) -> "Resource":
        return cls(tuple(names))

    @property
    def is_unit(self) -> bool:
        return not self.atoms

    def counter(self) -> Counter:
        return Counter(self.atoms)

    def __len__(self):
        return len(self.atoms)

    def __str__(self):
        if not self.atoms:
            return "e"
        return "{" + ", ".join(self.atoms) + "}"


EMPTY = Resource()


# --------------------------------------------------------------------------- actions


@dataclass(frozen=True, order=True)
class Action:
    factors: tuple[str, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "factors", tuple(sorted(self.factors)))

    @classmethod
    def of(cls, *names: str) -> "Action":
        return cls(tuple(names))

    @classmethod
    def parse(cls, text: str) -> "Action":
        text = text.strip()
        if text in ("1", ""):
            return UNIT_ACTION
        return cls(tuple(p.strip() for p in text.split(".") if p.strip() != "1"))

    def __mul__(self, other: "Action") -> "Action":
        return Action(self.factors + other.factors)

    @property
    def is_unit(self) -> bool:
        return not self.factors

    def __str__(self):
        return ".".join(self.factors) if self.factors else "1"


UNIT_ACTION = Action()


@dataclass(frozen=True)
class ActionSpec:
    name: str
    required: Resource
    produced: Resource


class Algebra:
    """The resource monoid and modification function of one model.

    ``atoms`` maps atom name to capacity. ``actions`` maps atomic action names to
    their (required, produced) pair; ``overrides`` holds explicit point values
    ``mu(a, R) = S`` that take precedence over the frame rule.
    """

    def __init__(
        self,
        atoms: dict[str, int],
        actions: dict[str, ActionSpec],
        overrides: Optional[dict[tuple[Action, Resource], Resource]] = None,
    ):
        self.atoms = dict(atoms)
        self.actions = dict(actions)
        self.overrides = dict(overrides or {})
        self._index = {a: i for i, a in enumerate(self.atoms)}
        self._names = tuple(self.atoms)
        self._caps = tuple(self.atoms.values())
        self._mu_cache: dict = {}
        self._split_cache: dict = {}

    # -- vectors

    def vector(self, r: Resource) -> tuple[int, ...]:
        v = [0] * len(self._names)
        for a in r.atoms:
            try:
                v[self._index[a]] += 1
            except KeyError:
                raise ModelError(f"undeclared atom {a!r}") from None
        return tuple(v)

    def resource(self, v: Iterable[int]) -> Resource:
        out = []
        for name, k in zip(self._names, v):
            out.extend([name] * k)
        return Resource(tuple(out))

    def check_resource(self, r: Resource) -> None:
        self.vector(r)

    def within_capacity(self, r: Resource) -> bool:
        return all(k <= c for k, c in zip(self.vector(r), self._caps))

    def check_action(self, a: Action) -> None:
        for f in a.factors:
            if f not in self.actions:
                raise ModelError(f"undeclared action {f!r}")

    # -- monoid

    def compose(self, r: Resource, s: Resource) -> Optional[Resource]:
        if r.is_unit:
            self.check_resource(s)
            return s
        if s.is_unit:
            self.check_resource(r)
            return r
        v = _kernels.add_within(self.vector(r), self.vector(s), self._caps)
        return None if v is None else self.resource(v)

    def compose_all(self, rs: Iterable[Resource]) -> Optional[Resource]:
        acc = EMPTY
        for r in rs:
            acc = self.compose(acc, r)
            if acc is None:
                return None
        return acc

    def difference(self, r: Resource, s: Resource) -> Optional[Resource]:
        """``r - s`` when ``s`` is a sub-multiset of ``r``."""
        v = _kernels.sub_if_contained(self.vector(r), self.vector(s))
        return None if v is None else self.resource(v)

    def splits(self, r: Resource) -> list[tuple[Resource, Resource]]:
        """Every ordered pair ``(r1, r2)`` with ``r1 o r2 = r``."""
        hit = self._split_cache.get(r)
        if hit is None:
            hit = [(self.resource(a), self.resource(b)) for a, b in _kernels.split_pairs(self.vector(r))]
            self._split_cache[r] = hit
        return hit

    def subresources(self, r: Resource) -> list[Resource]:
        return [a for a, _ in self.splits(r)]

    def full(self) -> Resource:
        return self.resource(self._caps)

    # -- modification function

    def _mu_atomic(self, name: str, r: Resource) -> Optional[Resource]:
        hit = self.overrides.get((Action.of(name), r))
        if hit is not None:
            return hit
        spec = self.actions[name]
        rest = self.difference(r, spec.required)
        if rest is None:
            return None
        return self.compose(spec.produced, rest)

    def mu(self, a: Action, r: Resource) -> Optional[Resource]:
        """Apply the modification function; ``None`` means undefined."""
        key = (a, r)
        if key in self._mu_cache:
            return self._mu_cache[key]
        self.check_action(a)
        self.check_resource(r)
        if a.is_unit:
            out = r
        elif key in self.overrides:
            out = self.overrides[key]
        elif len(a.factors) == 1:
            out = self._mu_atomic(a.factors[0], r)
        else:
            results = self._mu_results(a, r)
            if len(results) > 1:
                raise HomomorphismError(
                    f"mu({a}, {r}) is ambiguous: " + ", ".join(str(x) for x in sorted(results))
                )
            out = next(iter(results)) if results else None
        self._mu_cache[key] = out
        return out

    def _mu_results(self, a: Action, r: Resource) -> set[Resource]:
        """Results of ``mu(a, r)`` over all splits of ``r`` along the first factor."""
        head, tail = Action.of(a.factors[0]), Action(a.factors[1:])
        found = set()
        for r1, r2 in self.splits(r):
            x = self._mu_atomic(head.factors[0], r1)
            if x is None:
                continue
            y = self.mu(tail, r2)
            if y is None:
                continue
            z = self.compose(x, y)
            if z is not None:
                found.add(z)
        return found

    def rho(self, a: Action) -> Optional[Resource]:
        """Minimal resource on which ``mu(a, .)`` is defined."""
        self.check_action(a)
        return self.compose_all(self.actions[f].required for f in a.factors)


# --------------------------------------------------------------------------- process terms


NEUTRAL: Optional[str] = None  # the utility name of plain nondeterministic sums


class Term:
    __slots__ = ()

    @cached_property
    def holes(self) -> int:
        return _count_holes(self)

    @property
    def is_closed(self) -> bool:
        return self.holes == 0

    @property
    def is_open(self) -> bool:
        return self.holes > 0

    def __str__(self):
        return render(self)


def _term(cls):
    """Frozen dataclass whose hash is computed once; terms are hashed constantly."""
    cls = dataclass(frozen=True)(cls)
    names = tuple(f.name for f in fields(cls))

    def __hash__(self):
        h = self.__dict__.get("_hash")
        if h is None:
            h = hash((cls.__name__,) + tuple(getattr(self, n) for n in names))
            object.__setattr__(self, "_hash", h)
        return h

    cls.__hash__ = __hash__
    return cls


@_term
class Unit(Term):
    pass


@_term
class Hole(Term):
    pass


@_term
class Prefix(Term):
    action: Action
    body: Term


@_term
class Sum(Term):
    utility: Optional[str]
    branches: tuple[Term, ...] = ()


@_term
class Product(Term):
    left: Term
    right: Term


@_term
class Const(Term):
    name: str


ONE = Unit()
HOLE = Hole()
ZERO = Sum(NEUTRAL, ())

def _count_holes(t: Term) -> int:
    if isinstance(t, Hole):
        return 1
    if isinstance(t, Prefix):
        return t.body.holes
    if isinstance(t, Sum):
        return sum(b.holes for b in t.branches)
    if isinstance(t, Product):
        return t.left.holes + t.right.holes
    return 0


def product(*factors: Term) -> Term:
    """Right-nested product of the factors; ``1`` for none."""
    if not factors:
        return ONE
    acc = factors[-1]
    for f in reversed(factors[:-1]):
        acc = Product(f, acc)
    return acc


def factors_of(t: Term) -> list[Term]:
    if isinstance(t, Product):
        return factors_of(t.left) + factors_of(t.right)
    return [t]


def subterms(t: Term) -> Iterator[Term]:
    yield t
    if isinstance(t, Prefix):
        yield from subterms(t.body)
    elif isinstance(t, Sum):
        for b in t.branches:
            yield from subterms(b)
    elif isinstance(t, Product):
        yield from subterms(t.left)
        yield from subterms(t.right)


def substitute(e: Term, f: Term) -> Term:
    """Replace every hole of ``e`` by ``f``."""
    if e.is_closed:
        return e
    if isinstance(e, Hole):
        return f
    if isinstance(e, Prefix):
        return Prefix(e.action, substitute(e.body, f))
    if isinstance(e, Sum):
        return Sum(e.utility, tuple(substitute(b, f) for b in e.branches))
    if isinstance(e, Product):
        return Product(substitute(e.left, f), substitute(e.right, f))
    return e


@dataclass(frozen=True)
class WellFormed:
    ok: bool
    reason: str = ""

    def __bool__(self):
        return self.ok


def well_formed(e: Term) -> WellFormed:
    """At most one hole, and that hole not under a prefix."""
    if e.holes > 1:
        return WellFormed(False, f"{e.holes} holes")
    if _guarded_hole(e, False):
        return WellFormed(False, "hole guarded by a prefix")
    return WellFormed(True)


def _guarded_hole(e: Term, under: bool) -> bool:
    if isinstance(e, Hole):
        return under
    if isinstance(e, Prefix):
        return _guarded_hole(e.body, True)
    if isinstance(e, Sum):
        return any(_guarded_hole(b, under) for b in e.branches)
    if isinstance(e, Product):
        return _guarded_hole(e.left, under) or _guarded_hole(e.right, under)
    return False


# --------------------------------------------------------------------------- rendering


@lru_cache(maxsize=1 << 16)
def render(t: Term, prec: int = 0) -> str:
    """Concrete syntax; precedence 0 = sum, 1 = product, 2 = prefix/atom."""
    if isinstance(t, Unit):
        return "1"
    if isinstance(t, Hole):
        return "[]"
    if isinstance(t, Const):
        return t.name
    if isinstance(t, Prefix):
        s = f"{t.action} : {render(t.body, 2)}"
        return s if prec <= 1 else f"({s})"
    if isinstance(t, Product):
        s = f"{render(t.left, 2)} * {render(t.right, 1)}"
        return s if prec <= 1 else f"({s})"
    if isinstance(t, Sum):
        if not t.branches:
            return "0" if t.utility is None else f"sum[{t.utility}] {{}}"
        if len(t.branches) == 1:
            tag = "" if t.utility is None else f"[{t.utility}]"
            return f"sum{tag} {{ {render(t.branches[0])} }}"
        op = " + " if t.utility is None else f" +[{t.utility}] "
        parts = [render(b, 1) if not (isinstance(b, Sum) and len(b.branches) > 1) else f"({render(b)})" for b in t.branches]
        s = op.join(parts)
        return s if prec == 0 else f"({s})"
    raise TypeError(t)


# --------------------------------------------------------------------------- canonical form


def _key(t: Term) -> str:
    return render(t)


@lru_cache(maxsize=1 << 16)
def canonicalize(e: Term) -> Term:
    """Normal form modulo AC of products and sums and the units ``E * 1`` and ``E + 0``."""
    if isinstance(e, (Unit, Hole, Const)):
        return e
    if isinstance(e, Prefix):
        return Prefix(e.action, canonicalize(e.body))
    if isinstance(e, Product):
        fs = []
        for f in factors_of(e):
            c = canonicalize(f)
            fs.extend(factors_of(c))
        fs = [f for f in fs if not isinstance(f, Unit)]
        fs.sort(key=_key)
        return product(*fs)
    if isinstance(e, Sum):
        bs: list[Term] = []
        for b in e.branches:
            c = canonicalize(b)
            if isinstance(c, Sum) and c.utility == e.utility and c.branches:
                bs.extend(c.branches)
            elif c == ZERO:
                continue
            else:
                bs.append(c)
        if not bs:
            return ZERO
        if len(bs) == 1:
            return bs[0]
        bs.sort(key=_key)
        return Sum(e.utility, tuple(bs))
    raise TypeError(e)


# --------------------------------------------------------------------------- contexts


@dataclass(frozen=True)
class Context:
    resource: Resource
    process: Term

    # ordering goes through the rendering so contexts sort deterministically
    def __lt__(self, other):
        return (self.resource, render(self.process)) < (other.resource, render(other.process))

    @property
    def is_open(self) -> bool:
        return self.process.is_open

    @property
    def is_closed(self) -> bool:
        return self.process.is_closed

    def canonical(self) -> "Context":
        return Context(self.resource, canonicalize(self.process))

    def __str__(self):
        return f"({self.resource} ; {render(self.process)})"


EMPTY_CONTEXT = Context(EMPTY, HOLE)
UNIT_CONTEXT = Context(EMPTY, ONE)


def substitute_context(alg: Algebra, c1: Context, c2: Context) -> Optional[Context]:
    """``c1(c2)``: closed ``c1`` is returned unchanged; ``None`` if resources clash."""
    if c1.is_closed:
        return c1
    r = alg.compose(c1.resource, c2.resource)
    if r is None:
        return None
    return Context(r, substitute(c1.process, c2.process))


def compose_resources(alg: Algebra, r: Resource, s: Resource) -> Optional[Resource]:
    return alg.compose(r, s)


def mu_apply(alg: Algebra, a: Action, r: Resource) -> Optional[Resource]:
    return alg.mu(a, r)


def rho(alg: Algebra, a: Action) -> Optional[Resource]:
    return alg.rho(a)


# --------------------------------------------------------------------------- utilities

Number = Union[Fraction, float]


@dataclass(frozen=True)
class UtilitySpec:
    name: Optional[str]
    table: tuple[tuple[Context, Fraction], ...] = ()
    default: Fraction = Fraction(0)

    @cached_property
    def lookup(self) -> dict[Context, Fraction]:
        return {c.canonical(): v for c, v in self.table}

    @property
    def is_neutral(self) -> bool:
        return self.name is None


NEUTRAL_UTILITY = UtilitySpec(None)


def utility_eval(u: UtilitySpec, c: Context) -> Fraction:
    """Value of a closed context; the neutral utility is identically zero."""
    if u.is_neutral:
        return Fraction(0)
    if c.is_open:
        raise UsageError(f"utility {u.name} applied to open context {c}")
    return u.lookup.get(c.canonical(), u.default)


def world_value(u: UtilitySpec, c: Context) -> Fraction:
    """Like ``utility_eval`` but open worlds fall back to the default value."""
    if u.is_neutral:
        return Fraction(0)
    return u.lookup.get(c.canonical(), u.default)


def leq(x: Number, y: Number, tolerance: Optional[float] = None) -> bool:
    if tolerance is None:
        return x <= y
    return float(x) <= float(y) + tolerance


def close(x: Number, y: Number, tolerance: Optional[float] = None) -> bool:
    if tolerance is None:
        return x == y
    return abs(float(x) - float(y)) <= tolerance
