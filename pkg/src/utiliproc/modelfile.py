"""Lexer, parser and printer for ``.upm`` model files.

The format is documented in ``docs/format.md``; ``models/banker.upm`` is the
conformance fixture.
"""
from __future__ import annotations

import re
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Optional

from . import formula as F
from .kernel import (
    EMPTY,
    HOLE,
    NEUTRAL,
    ONE,
    UNIT_ACTION,
    ZERO,
    Action,
    ActionSpec,
    Const,
    Context,
    Prefix,
    Product,
    Resource,
    Sum,
    Term,
    UtilitySpec,
    render,
    subterms,
)
from .model import ERROR, WARNING, CostSpec, Diagnostic, Model, Query, UniverseDecl


class ModelSyntaxError(ValueError):
    def __init__(self, diagnostics: list[Diagnostic]):
        self.diagnostics = sorted(diagnostics)
        super().__init__("\n".join(str(d) for d in self.diagnostics))


# --------------------------------------------------------------------------- lexer

_TOKEN = re.compile(
    r"""
    (?P<ws>[ \t\r\n]+)
  | (?P<comment>\#[^\n]*)
  | (?P<number>\d+(?:\.\d+)?)
  | (?P<ident>[A-Za-z_][A-Za-z0-9_']*(?:-[A-Za-z0-9_']+)*)
  | (?P<op>->|-\*|[{}()\[\];,=:+*.<>-])
  """,
    re.VERBOSE,
)

KEYWORDS = {"atoms", "actions", "resource", "process", "utility", "cost", "atomprop",
            "universe", "query", "requires", "produces", "mu", "default", "sum", "e",
            "true", "false", "not", "and", "or", "emp", "pref", "generate", "depth"}


@dataclass(frozen=True)
class Token:
    kind: str  # ident, number, op, eof
    text: str
    line: int
    column: int


def lex(text: str) -> list[Token]:
    out = []
    pos = 0
    line, col = 1, 1
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if m is None:
            raise ModelSyntaxError([Diagnostic(line, col, ERROR, "LEX", f"unexpected character {text[pos]!r}")])
        kind = m.lastgroup
        s = m.group()
        if kind not in ("ws", "comment"):
            out.append(Token(kind, s, line, col))
        nl = s.count("\n")
        if nl:
            line += nl
            col = len(s) - s.rfind("\n")
        else:
            col += len(s)
        pos = m.end()
    out.append(Token("eof", "", line, col))
    return out


# --------------------------------------------------------------------------- parser


QUERY_FIELDS = {
    "check": {"primary": "context", "surrounding": "context", "formula": "formula",
              "expect": "bool", "mode": "ident", "universe": "ident", "depth": "int"},
    "bisim": {"left": "term", "right": "term", "expect": "bool", "universe": "ident", "depth": "int"},
    "trace": {"primary": "context", "surrounding": "context", "actions": "actions",
              "expect": "bool", "depth": "int"},
    "trustdomain": {"agent": "context", "formula": "formula", "cost": "ident", "bound": "number",
                    "candidates": "contexts", "length": "int", "levels": "numbers",
                    "universe": "ident", "depth": "int", "mode": "ident"},
}


class Parser:
    def __init__(self, text: str):
        self.tokens = lex(text)
        self.i = 0
        self.model = Model()
        self.errors: list[Diagnostic] = []
        self._refs: list[tuple[str, str, Token]] = []  # (kind, name, where)

    # -- token helpers

    @property
    def tok(self) -> Token:
        return self.tokens[self.i]

    def peek(self, k: int = 1) -> Token:
        return self.tokens[min(self.i + k, len(self.tokens) - 1)]

    def error(self, message: str, tok: Optional[Token] = None, code: str = "SYNTAX") -> ModelSyntaxError:
        tok = tok or self.tok
        where = "end of input" if tok.kind == "eof" else repr(tok.text)
        return ModelSyntaxError([Diagnostic(tok.line, tok.column, ERROR, code, f"{message} (at {where})")])

    def at(self, text: str) -> bool:
        return self.tok.kind in ("op", "ident") and self.tok.text == text

    def accept(self, text: str) -> Optional[Token]:
        if self.at(text):
            t = self.tok
            self.i += 1
            return t
        return None

    def expect(self, text: str) -> Token:
        t = self.accept(text)
        if t is None:
            raise self.error(f"expected {text!r}")
        return t

    def ident(self, what: str = "identifier", allow_keyword: bool = False) -> Token:
        t = self.tok
        if t.kind != "ident" or (not allow_keyword and t.text in KEYWORDS):
            raise self.error(f"expected {what}")
        self.i += 1
        return t

    def number(self) -> Fraction:
        neg = self.accept("-") is not None
        t = self.tok
        if t.kind != "number":
            raise self.error("expected number")
        self.i += 1
        v = Fraction(t.text)
        return -v if neg else v

    def ref(self, kind: str, tok: Token) -> str:
        self._refs.append((kind, tok.text, tok))
        return tok.text

    def declare(self, table: dict, kind: str, tok: Token, value) -> None:
        if tok.text in table:
            self.errors.append(Diagnostic(tok.line, tok.column, ERROR, "DUPLICATE",
                                          f"{kind} {tok.text!r} declared twice"))
            return
        table[tok.text] = value
        self.model.source_lines[f"{kind}:{tok.text}"] = (tok.line, tok.column)

    # -- top level

    def parse(self) -> Model:
        while self.tok.kind != "eof":
            t = self.tok
            handler: Optional[Callable[[], None]] = {
                "atoms": self.p_atoms,
                "actions": self.p_actions,
                "resource": self.p_resource_decl,
                "process": self.p_process,
                "utility": self.p_utility,
                "cost": self.p_cost,
                "atomprop": self.p_atomprop,
                "universe": self.p_universe,
                "query": self.p_query,
            }.get(t.text if t.kind == "ident" else "")
            if handler is None:
                raise self.error("expected a declaration")
            handler()
        self.resolve()
        if self.errors:
            raise ModelSyntaxError(self.errors)
        if not self.model.queries:
            self.model.diagnostics.append(Diagnostic(1, 1, WARNING, "NO_QUERIES", "no queries"))
        return self.model

    def p_atoms(self):
        self.expect("atoms")
        self.expect("{")
        while not self.accept("}"):
            name = self.ident("atom name")
            cap = 1
            if self.accept("["):
                t = self.tok
                cap = int(self.number())
                if cap < 1:
                    raise self.error("capacity must be positive", t)
                self.expect("]")
            self.expect(";")
            self.declare(self.model.atoms, "atom", name, cap)

    def p_actions(self):
        self.expect("actions")
        self.expect("{")
        while not self.accept("}"):
            if self.at("mu"):
                t = self.expect("mu")
                a = self.action()
                r = self.resource_expr()
                self.expect("->")
                s = self.resource_expr()
                self.expect(";")
                for f in a.factors:
                    self._refs.append(("action", f, t))
                if (a, r) in self.model.overrides:
                    self.errors.append(Diagnostic(t.line, t.column, ERROR, "DUPLICATE", f"mu {a} {r} given twice"))
                self.model.overrides[(a, r)] = s
                self.model.source_lines[f"mu:{a}:{r}"] = (t.line, t.column)
                continue
            name = self.ident("action name")
            req = prod = EMPTY
            if self.accept("requires"):
                req = self.resource_expr()
            if self.accept("produces"):
                prod = self.resource_expr()
            else:
                prod = req
            self.expect(";")
            self.declare(self.model.actions, "action", name, ActionSpec(name.text, req, prod))

    def p_resource_decl(self):
        self.expect("resource")
        name = self.ident("resource name")
        self.expect("=")
        r = self.resource_expr()
        self.expect(";")
        self.declare(self.model.resources, "resource", name, r)

    def p_process(self):
        self.expect("process")
        name = self.ident("process name")
        self.expect("=")
        body = self.term()
        self.expect(";")
        self.declare(self.model.processes, "process", name, body)

    def p_utility(self):
        self.expect("utility")
        name = self.ident("utility name")
        rows = []
        default = Fraction(0)
        self.expect("{")
        while not self.accept("}"):
            if self.accept("default"):
                self.expect("=")
                default = self.number()
            else:
                c = self.context()
                self.expect("=")
                rows.append((c, self.number()))
            self.expect(";")
        self.declare(self.model.utilities, "utility", name, UtilitySpec(name.text, tuple(rows), default))

    def p_cost(self):
        self.expect("cost")
        name = self.ident("cost name")
        rows = []
        self.expect("{")
        while not self.accept("}"):
            t = self.ident("action name")
            self.ref("action", t)
            self.expect("=")
            rows.append((t.text, self.number()))
            self.expect(";")
        self.declare(self.model.costs, "cost", name, CostSpec(name.text, tuple(rows)))

    def p_atomprop(self):
        self.expect("atomprop")
        name = self.ident("proposition name")
        cs = []
        self.expect("{")
        while not self.accept("}"):
            cs.append(self.context())
            self.expect(";")
        self.declare(self.model.atomprops, "atomprop", name, tuple(cs))

    def p_universe(self):
        self.expect("universe")
        name = self.ident("universe name")
        cs = []
        gen = depth = None
        self.expect("{")
        while not self.accept("}"):
            if self.accept("generate"):
                gen = int(self.number())
            elif self.accept("depth"):
                depth = int(self.number())
            else:
                cs.append(self.context())
            self.expect(";")
        self.declare(self.model.universes, "universe", name, UniverseDecl(name.text, tuple(cs), gen, depth))

    def p_query(self):
        self.expect("query")
        name = self.ident("query name")
        self.expect(":")
        kind_tok = self.ident("query kind")
        kind = kind_tok.text
        if kind not in QUERY_FIELDS:
            raise self.error(f"unknown query kind {kind!r}", kind_tok)
        spec = QUERY_FIELDS[kind]
        fields = []
        self.expect("{")
        while not self.accept("}"):
            key = self.ident("field name", allow_keyword=True)
            if key.text not in spec:
                raise self.error(f"query kind {kind} has no field {key.text!r}", key)
            self.expect("=")
            fields.append((key.text, self.field_value(spec[key.text])))
            self.expect(";")
        self.declare(self.model.queries, "query", name, Query(name.text, kind, tuple(fields)))

    def field_value(self, typ: str):
        if typ == "context":
            return self.context()
        if typ == "term":
            return self.term()
        if typ == "formula":
            return self.formula()
        if typ == "bool":
            t = self.tok
            if self.accept("true"):
                return True
            if self.accept("false"):
                return False
            raise self.error("expected true or false", t)
        if typ == "int":
            return int(self.number())
        if typ == "number":
            return self.number()
        if typ == "ident":
            return self.ident(allow_keyword=True).text
        if typ == "actions":
            return tuple(self.listing(self.action))
        if typ == "contexts":
            return tuple(self.listing(self.context))
        if typ == "numbers":
            return tuple(self.listing(self.number))
        if typ == "idents":
            return tuple(self.listing(lambda: self.ident().text))
        raise AssertionError(typ)

    def listing(self, item):
        self.expect("[")
        out = []
        if self.accept("]"):
            return out
        out.append(item())
        while self.accept(","):
            out.append(item())
        self.expect("]")
        return out

    # -- resources, actions, contexts

    def resource_expr(self) -> Resource:
        atoms = list(self.resource_atom().atoms)
        while self.accept("+"):
            atoms.extend(self.resource_atom().atoms)
        return Resource(tuple(atoms))

    def resource_atom(self) -> Resource:
        if self.accept("e"):
            return EMPTY
        if self.accept("{"):
            names = []
            if not self.accept("}"):
                t = self.ident("atom name")
                names.append(self.ref("atom", t))
                while self.accept(","):
                    t = self.ident("atom name")
                    names.append(self.ref("atom", t))
                self.expect("}")
            return Resource(tuple(names))
        t = self.ident("resource")
        if t.text not in self.model.resources:
            raise self.error(f"undeclared resource {t.text!r}", t, code="UNDECLARED_RESOURCE")
        return self.model.resources[t.text]

    def action(self) -> Action:
        if self.tok.kind == "number" and self.tok.text == "1":
            self.i += 1
            return UNIT_ACTION
        names = [self.ident("action name")]
        while self.accept("."):
            names.append(self.ident("action name"))
        for t in names:
            self.ref("action", t)
        return Action(tuple(t.text for t in names))

    def context(self) -> Context:
        self.expect("(")
        r = self.resource_expr()
        self.expect(";")
        p = self.term()
        self.expect(")")
        return Context(r, p)

    # -- process terms

    def term(self) -> Term:
        first = self.product_term()
        branches = [first]
        utility: object = ...
        while self.at("+"):
            t = self.expect("+")
            u = NEUTRAL
            if self.at("[") and self.peek().kind == "ident" and self.peek(2).text == "]":
                self.expect("[")
                u = self.ref("utility", self.ident("utility name"))
                self.expect("]")
            if utility is not ... and u != utility:
                raise self.error("mixed utilities in one sum; add parentheses", t)
            utility = u
            branches.append(self.product_term())
        if len(branches) == 1:
            return first
        return Sum(utility, tuple(branches))  # type: ignore[arg-type]

    def product_term(self) -> Term:
        left = self.prefix_term()
        if self.accept("*"):
            return Product(left, self.product_term())
        return left

    def prefix_term(self) -> Term:
        t = self.tok
        is_action_start = (t.kind == "ident" and t.text not in KEYWORDS) or (t.kind == "number" and t.text == "1")
        if is_action_start:
            j = self.i + 1
            while self.tokens[j].text == "." and self.tokens[j + 1].kind == "ident":
                j += 2
            if self.tokens[j].text == ":":
                a = self.action()
                self.expect(":")
                return Prefix(a, self.prefix_term())
        return self.atomic_term()

    def atomic_term(self) -> Term:
        t = self.tok
        if t.kind == "number" and t.text in ("0", "1"):
            self.i += 1
            return ZERO if t.text == "0" else ONE
        if self.accept("["):
            self.expect("]")
            return HOLE
        if self.accept("("):
            e = self.term()
            self.expect(")")
            return e
        if self.accept("sum"):
            u = NEUTRAL
            if self.accept("["):
                u = self.ref("utility", self.ident("utility name"))
                self.expect("]")
            self.expect("{")
            bs = []
            if not self.accept("}"):
                bs.append(self.term())
                while self.accept(";"):
                    bs.append(self.term())
                self.expect("}")
            return Sum(u, tuple(bs))
        if t.kind == "ident" and t.text not in KEYWORDS:
            self.i += 1
            return Const(self.ref("process", t))
        raise self.error("expected a process term")

    # -- formulas

    def formula(self) -> F.Formula:
        left = self.f_or()
        if self.accept("->"):
            return F.Implies(left, self.formula())
        if self.accept("-*"):
            return F.Wand(left, self.formula())
        return left

    def f_or(self) -> F.Formula:
        f = self.f_and()
        while self.accept("or"):
            f = F.Or(f, self.f_and())
        return f

    def f_and(self) -> F.Formula:
        f = self.f_star()
        while self.accept("and"):
            f = F.And(f, self.f_star())
        return f

    def f_star(self) -> F.Formula:
        f = self.f_unary()
        while self.accept("*"):
            f = F.Star(f, self.f_unary())
        return f

    def f_unary(self) -> F.Formula:
        if self.accept("not"):
            return F.Not(self.f_unary())
        if self.accept("<"):
            if self.accept("pref"):
                u = self.ref("utility", self.ident("utility name"))
                self.expect(">")
                return F.PrefDiamond(u, self.f_unary())
            a = self.action()
            self.expect(">")
            return F.Diamond(a, self.f_unary())
        if self.accept("["):
            if self.accept("pref"):
                u = self.ref("utility", self.ident("utility name"))
                self.expect("]")
                return F.PrefBox(u, self.f_unary())
            a = self.action()
            self.expect("]")
            return F.Box(a, self.f_unary())
        if self.accept("true"):
            return F.TRUE
        if self.accept("false"):
            return F.FALSE
        if self.accept("emp"):
            return F.EMP
        if self.accept("("):
            f = self.formula()
            self.expect(")")
            return f
        t = self.tok
        if t.kind == "ident" and t.text not in KEYWORDS:
            self.i += 1
            return F.Atom(self.ref("atomprop", t))
        raise self.error("expected a formula")

    # -- name resolution

    def resolve(self) -> None:
        m = self.model
        tables = {"atom": m.atoms, "action": m.actions, "process": m.processes,
                  "utility": m.utilities, "atomprop": m.atomprops}
        seen = set()
        for kind, name, tok in self._refs:
            if name in tables[kind] or (kind, name, tok.line, tok.column) in seen:
                continue
            seen.add((kind, name, tok.line, tok.column))
            self.errors.append(Diagnostic(tok.line, tok.column, ERROR, f"UNDECLARED_{kind.upper()}",
                                          f"undeclared {kind} {name!r}"))
        for q in m.queries.values():
            line, col = m.location(f"query:{q.name}")
            for key, ref_kind in (("cost", m.costs), ("universe", m.universes)):
                v = q.get(key)
                if v is not None and v not in ref_kind:
                    self.errors.append(Diagnostic(line, col, ERROR, f"UNDECLARED_{key.upper()}",
                                                  f"query {q.name}: undeclared {key} {v!r}"))
            mode = q.get("mode")
            if mode is not None and mode not in ("global", "local"):
                self.errors.append(Diagnostic(line, col, ERROR, "BAD_MODE", f"query {q.name}: mode must be global or local"))


def parse_model(text: str) -> Model:
    """Parse model text; raises ``ModelSyntaxError`` carrying diagnostics."""
    return Parser(text).parse()


def _fragment(text: str, model: Optional[Model], rule: str):
    p = Parser(text)
    if model is not None:
        p.model = model
    value = getattr(p, rule)()
    if p.tok.kind != "eof":
        raise p.error("unexpected trailing input")
    if model is not None:
        p.errors.clear()
        tables = {"atom": model.atoms, "action": model.actions, "process": model.processes,
                  "utility": model.utilities, "atomprop": model.atomprops}
        for kind, name, tok in p._refs:
            if name not in tables[kind]:
                p.errors.append(Diagnostic(tok.line, tok.column, ERROR, f"UNDECLARED_{kind.upper()}",
                                           f"undeclared {kind} {name!r}"))
        if p.errors:
            raise ModelSyntaxError(p.errors)
    return value


def parse_formula(text: str, model: Optional[Model] = None) -> F.Formula:
    """Parse a formula; with ``model`` given, names are checked against it."""
    return _fragment(text, model, "formula")


def parse_context(text: str, model: Optional[Model] = None) -> Context:
    return _fragment(text, model, "context")


def parse_term(text: str, model: Optional[Model] = None) -> Term:
    return _fragment(text, model, "term")


def load_model(text: str) -> tuple[Optional[Model], list[Diagnostic]]:
    try:
        m = parse_model(text)
    except ModelSyntaxError as exc:
        return None, exc.diagnostics
    return m, sorted(m.diagnostics)


# --------------------------------------------------------------------------- printer


def _num(v: Fraction) -> str:
    if v.denominator == 1:
        return str(v.numerator)
    for k in range(1, 41):
        scaled = v * 10 ** k
        if scaled.denominator == 1:
            sign = "-" if scaled < 0 else ""
            digits = str(abs(scaled.numerator)).rjust(k + 1, "0")
            return f"{sign}{digits[:-k]}.{digits[-k:]}"
    raise ValueError(f"{v} has no finite decimal expansion")


def _res(r: Resource) -> str:
    return "e" if r.is_unit else "{" + ", ".join(r.atoms) + "}"


def _ctx(c: Context) -> str:
    return f"({_res(c.resource)} ; {render(c.process)})"


def _field(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, Context):
        return _ctx(v)
    if isinstance(v, Term):
        return render(v)
    if isinstance(v, F.Formula):
        return F.show(v)
    if isinstance(v, Fraction):
        return _num(v)
    if isinstance(v, int):
        return str(v)
    if isinstance(v, str):
        return v
    if isinstance(v, tuple):
        return "[" + ", ".join(_field(x) for x in v) + "]"
    if isinstance(v, Action):
        return str(v)
    raise TypeError(v)


def print_model(m: Model) -> str:
    out = []
    if m.atoms:
        out.append("atoms {")
        for a, c in m.atoms.items():
            out.append(f"  {a};" if c == 1 else f"  {a}[{c}];")
        out.append("}")
    if m.actions or m.overrides:
        out.append("actions {")
        for spec in m.actions.values():
            out.append(f"  {spec.name} requires {_res(spec.required)} produces {_res(spec.produced)};")
        for (a, r), s in m.overrides.items():
            out.append(f"  mu {a} {_res(r)} -> {_res(s)};")
        out.append("}")
    for name, r in m.resources.items():
        out.append(f"resource {name} = {_res(r)};")
    for name, body in m.processes.items():
        out.append(f"process {name} = {render(body)};")
    for u in m.utilities.values():
        out.append(f"utility {u.name} {{")
        for c, v in u.table:
            out.append(f"  {_ctx(c)} = {_num(v)};")
        out.append(f"  default = {_num(u.default)};")
        out.append("}")
    for k in m.costs.values():
        out.append(f"cost {k.name} {{")
        for a, v in k.per_action:
            out.append(f"  {a} = {_num(v)};")
        out.append("}")
    for name, cs in m.atomprops.items():
        out.append(f"atomprop {name} {{")
        for c in cs:
            out.append(f"  {_ctx(c)};")
        out.append("}")
    for u in m.universes.values():
        out.append(f"universe {u.name} {{")
        for c in u.contexts:
            out.append(f"  {_ctx(c)};")
        if u.generate is not None:
            out.append(f"  generate {u.generate};")
        if u.depth is not None:
            out.append(f"  depth {u.depth};")
        out.append("}")
    for q in m.queries.values():
        out.append(f"query {q.name} : {q.kind} {{")
        for k, v in q.fields:
            out.append(f"  {k} = {_field(v)};")
        out.append("}")
    return "\n".join(out) + "\n"


def guard_violations(m: Model) -> list[tuple[str, str]]:
    """(definition, constant) pairs where the constant occurs unguarded in the body."""
    bad = []
    for name, body in m.processes.items():
        for c in _unguarded_consts(body):
            bad.append((name, c))
    return bad


def _unguarded_consts(t: Term) -> list[str]:
    if isinstance(t, Const):
        return [t.name]
    if isinstance(t, Prefix):
        return []
    if isinstance(t, Sum):
        return [c for b in t.branches for c in _unguarded_consts(b)]
    if isinstance(t, Product):
        return _unguarded_consts(t.left) + _unguarded_consts(t.right)
    return []


def process_subterms(m: Model) -> list[Term]:
    seen: dict[Term, None] = {}
    for body in m.processes.values():
        for s in subterms(body):
            seen.setdefault(s, None)
    for name in m.processes:
        seen.setdefault(Const(name), None)
    return list(seen)
