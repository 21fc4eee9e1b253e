"""Formula syntax tree for the context-sensitive modal logic."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator, Optional

from .kernel import Action


class Formula:
    __slots__ = ()

    def __str__(self):
        return show(self)


@dataclass(frozen=True)
class Atom(Formula):
    name: str


@dataclass(frozen=True)
class Bottom(Formula):
    pass


@dataclass(frozen=True)
class Top(Formula):
    pass


@dataclass(frozen=True)
class Not(Formula):
    body: Formula


@dataclass(frozen=True)
class And(Formula):
    left: Formula
    right: Formula


@dataclass(frozen=True)
class Or(Formula):
    left: Formula
    right: Formula


@dataclass(frozen=True)
class Implies(Formula):
    left: Formula
    right: Formula


@dataclass(frozen=True)
class Diamond(Formula):
    action: Action
    body: Formula


@dataclass(frozen=True)
class Box(Formula):
    action: Action
    body: Formula


@dataclass(frozen=True)
class MultUnit(Formula):
    pass


@dataclass(frozen=True)
class Star(Formula):
    left: Formula
    right: Formula


@dataclass(frozen=True)
class Wand(Formula):
    left: Formula
    right: Formula


@dataclass(frozen=True)
class PrefBox(Formula):
    utility: str
    body: Formula


@dataclass(frozen=True)
class PrefDiamond(Formula):
    utility: str
    body: Formula


TRUE = Top()
FALSE = Bottom()
EMP = MultUnit()

_BINARY = {And: ("and", 2), Or: ("or", 1), Star: ("*", 3), Implies: ("->", 0), Wand: ("-*", 0)}


def show(f: Formula, prec: int = 0) -> str:
    """Concrete syntax. Precedence: unary 4 > * 3 > and 2 > or 1 > -> / -* 0."""
    if isinstance(f, Top):
        return "true"
    if isinstance(f, Bottom):
        return "false"
    if isinstance(f, MultUnit):
        return "emp"
    if isinstance(f, Atom):
        return f.name
    if isinstance(f, Not):
        return f"not {show(f.body, 4)}"
    if isinstance(f, Diamond):
        return f"<{f.action}> {show(f.body, 4)}"
    if isinstance(f, Box):
        return f"[{f.action}] {show(f.body, 4)}"
    if isinstance(f, PrefBox):
        return f"[pref {f.utility}] {show(f.body, 4)}"
    if isinstance(f, PrefDiamond):
        return f"<pref {f.utility}> {show(f.body, 4)}"
    op, p = _BINARY[type(f)]
    if p == 0:
        s = f"{show(f.left, 1)} {op} {show(f.right, 0)}"
    else:
        s = f"{show(f.left, p)} {op} {show(f.right, p + 1)}"
    return s if prec <= p else f"({s})"


def children(f: Formula) -> tuple[Formula, ...]:
    if isinstance(f, (Not, Diamond, Box, PrefBox, PrefDiamond)):
        return (f.body,)
    if isinstance(f, (And, Or, Implies, Star, Wand)):
        return (f.left, f.right)
    return ()


def walk(f: Formula) -> Iterator[Formula]:
    yield f
    for c in children(f):
        yield from walk(c)


def modal_depth(f: Formula) -> int:
    inner = max((modal_depth(c) for c in children(f)), default=0)
    return inner + (1 if isinstance(f, (Diamond, Box)) else 0)


def needs_universe(f: Formula) -> bool:
    return any(isinstance(g, (Star, Wand, PrefBox, PrefDiamond)) for g in walk(f))


def actions_of(f: Formula) -> set[Action]:
    return {g.action for g in walk(f) if isinstance(g, (Diamond, Box))}


def utilities_of(f: Formula) -> set[str]:
    return {g.utility for g in walk(f) if isinstance(g, (PrefBox, PrefDiamond))}


def atoms_of(f: Formula) -> set[str]:
    return {g.name for g in walk(f) if isinstance(g, Atom)}


def security_level(defence: Action, attacker: Formula, utility: str, attack: Action) -> Formula:
    """``attacker -* [defence][pref utility] not <attack> true``."""
    return Wand(attacker, Box(defence, PrefBox(utility, Not(Diamond(attack, TRUE)))))


def conj(*fs: Formula) -> Optional[Formula]:
    if not fs:
        return None
    acc = fs[-1]
    for f in reversed(fs[:-1]):
        acc = And(f, acc)
    return acc
