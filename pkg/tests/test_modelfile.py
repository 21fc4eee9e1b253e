from fractions import Fraction
from pathlib import Path

import pytest
from hypothesis import given, settings, strategies as st

from utiliproc import formula as F
from utiliproc.kernel import HOLE, ONE, ZERO, Action, Const, Context, Prefix, Product, Resource, Sum, render
from utiliproc.model import ERROR, WARNING
from utiliproc.modelfile import (
    ModelSyntaxError,
    load_model,
    parse_context,
    parse_formula,
    parse_model,
    parse_term,
    print_model,
)

ROOT = Path(__file__).resolve().parent.parent
SHIPPED = sorted((ROOT / "models").glob("*.upm")) + sorted((ROOT / "tests" / "fixtures").glob("*.upm"))


def codes(text):
    _, diags = load_model(text)
    return [(d.severity, d.code) for d in diags]


@pytest.mark.parametrize("path", SHIPPED, ids=lambda p: p.name)
def test_print_parse_roundtrip(path):
    m = parse_model(path.read_text())
    printed = print_model(m)
    again = parse_model(printed)
    assert again == m
    assert print_model(again) == printed


def test_banker_contents():
    m = parse_model((ROOT / "models" / "banker.upm").read_text())
    assert list(m.atoms) == ["Acnt", "USB", "r1", "r2"]
    assert m.resources["R_C"] == Resource.of("Acnt", "r1")
    assert m.processes["Banker"] == Sum("uB", (Prefix(Action.of("present"), Const("Banker'")),
                                               Prefix(Action.of("idle_B"), Const("Banker'"))))
    values = sorted(v for _, v in m.utilities["uB"].table)
    assert values == [Fraction(1, 10), Fraction(1, 5), Fraction(1, 2), Fraction(7, 10)]
    assert m.queries["fig4"].get("actions") == (Action.of("logIn", "present"),)


def test_numbers_are_exact():
    m = parse_model("utility u { default = 0.1; } cost k { } atoms { x; } actions { a requires {x}; }"
                    " cost k2 { a = -2.25; }")
    assert m.utilities["u"].default == Fraction(1, 10)
    assert m.costs["k2"].table["a"] == Fraction(-9, 4)


def test_utility_keys_are_canonical():
    m = parse_model("""
        atoms { x; } actions { a requires {x}; }
        process P = a : 1; process Q = 1;
        utility u { ({x} ; Q * P) = 3; }
    """)
    assert m.utilities["u"].lookup[Context(Resource.of("x"), Product(Const("P"), Const("Q"))).canonical()] == 3


def test_precedence():
    assert parse_term("a : P * Q + R") == Sum(None, (Product(Prefix(Action.of("a"), Const("P")), Const("Q")), Const("R")))
    assert parse_term("P * Q * R") == Product(Const("P"), Product(Const("Q"), Const("R")))
    assert parse_term("sum[u] { 1; []; 0 }") == Sum("u", (ONE, HOLE, ZERO))
    assert parse_term("1 : 1") == Prefix(Action(()), ONE)


def test_formula_precedence():
    phi = parse_formula("not p and q or r -> s -* t")
    assert phi == F.Implies(F.Or(F.And(F.Not(F.Atom("p")), F.Atom("q")), F.Atom("r")), F.Wand(F.Atom("s"), F.Atom("t")))
    assert parse_formula("<a.b> [pref u] emp * true") == F.Star(
        F.Diamond(Action.of("a", "b"), F.PrefBox("u", F.EMP)), F.TRUE)


def test_mixed_utilities_need_parentheses():
    with pytest.raises(ModelSyntaxError):
        parse_term("P +[u] Q +[v] R")
    assert parse_term("(P +[u] Q) +[v] R") == Sum("v", (Sum("u", (Const("P"), Const("Q"))), Const("R")))


# -- diagnostics


def test_empty_input_warns():
    assert codes("") == [(WARNING, "NO_QUERIES")]


def test_truncated_input_is_an_error():
    with pytest.raises(ModelSyntaxError) as exc:
        parse_model("process P = a :")
    (d,) = exc.value.diagnostics
    assert d.code == "SYNTAX" and d.line == 1 and "end of input" in d.message


def test_unknown_atom_is_located():
    text = "atoms { x; }\nactions {\n  a requires {y};\n}\n"
    _, diags = load_model(text)
    assert [(d.line, d.column, d.code) for d in diags if d.severity == ERROR] == [(3, 15, "UNDECLARED_ATOM")]


def test_undeclared_names_all_reported_in_order():
    text = "process P = a : Q +[u] 1;\nquery q : check { primary = (e ; P); surrounding = (e ; []); formula = p; }\n"
    _, diags = load_model(text)
    got = [d.code for d in diags]
    assert got == ["UNDECLARED_ACTION", "UNDECLARED_PROCESS", "UNDECLARED_UTILITY", "UNDECLARED_ATOMPROP"]
    assert diags == sorted(diags)


def test_duplicate_declaration():
    assert (ERROR, "DUPLICATE") in codes("atoms { x; x; }")


def test_undeclared_resource_name():
    with pytest.raises(ModelSyntaxError) as exc:
        parse_model("atoms { x; } resource R = S;")
    assert exc.value.diagnostics[0].code == "UNDECLARED_RESOURCE"


def test_unknown_query_field_and_kind():
    with pytest.raises(ModelSyntaxError):
        parse_model("query q : check { colour = 1; }")
    with pytest.raises(ModelSyntaxError):
        parse_model("query q : prove { }")


def test_query_references_checked():
    text = ("atoms { x; } actions { a requires {x}; }\n"
            "query q : trustdomain { agent = (e ; 1); formula = true; cost = k; bound = 1; candidates = []; }")
    assert (ERROR, "UNDECLARED_COST") in codes(text)
    assert (ERROR, "BAD_MODE") in codes(text.replace("bound = 1;", "bound = 1; mode = sideways;"))


def test_comments_and_whitespace():
    a = parse_model("# heading\natoms {x;}   # trailing\n")
    b = parse_model("atoms\n{\n  x ;\n}\n")
    assert a == b


def test_fragment_parsers_check_names():
    m = parse_model((ROOT / "models" / "banker.upm").read_text())
    assert parse_context("(R_B ; Banker)", m).resource == Resource.of("USB", "r2")
    with pytest.raises(ModelSyntaxError):
        parse_term("Nobody", m)
    with pytest.raises(ModelSyntaxError):
        parse_formula("<fly> true", m)
    with pytest.raises(ModelSyntaxError):
        parse_term("Banker )", m)


# -- round trip on generated terms and formulas

NAMES = st.sampled_from(["P", "Q", "R'"])
ACTIONS = st.lists(st.sampled_from(["a", "b", "c"]), max_size=3).map(lambda xs: Action(tuple(xs)))
UTILS = st.sampled_from([None, "u", "v"])


def terms():
    leaf = st.one_of(st.just(ONE), st.just(ZERO), st.just(HOLE), NAMES.map(Const))
    return st.recursive(leaf, lambda t: st.one_of(
        st.tuples(ACTIONS, t).map(lambda p: Prefix(*p)),
        st.tuples(t, t).map(lambda p: Product(*p)),
        st.tuples(UTILS, st.lists(t, min_size=1, max_size=3)).map(lambda p: Sum(p[0], tuple(p[1]))),
    ), max_leaves=8)


def formulas():
    leaf = st.one_of(st.just(F.TRUE), st.just(F.FALSE), st.just(F.EMP), st.sampled_from(["p", "q"]).map(F.Atom))
    return st.recursive(leaf, lambda f: st.one_of(
        f.map(F.Not),
        st.tuples(f, f).map(lambda p: F.And(*p)),
        st.tuples(f, f).map(lambda p: F.Or(*p)),
        st.tuples(f, f).map(lambda p: F.Implies(*p)),
        st.tuples(f, f).map(lambda p: F.Star(*p)),
        st.tuples(f, f).map(lambda p: F.Wand(*p)),
        st.tuples(ACTIONS, f).map(lambda p: F.Diamond(*p)),
        st.tuples(ACTIONS, f).map(lambda p: F.Box(*p)),
        st.tuples(st.sampled_from(["u", "v"]), f).map(lambda p: F.PrefBox(*p)),
        st.tuples(st.sampled_from(["u", "v"]), f).map(lambda p: F.PrefDiamond(*p)),
    ), max_leaves=8)


@settings(max_examples=300, deadline=None)
@given(terms())
def test_term_roundtrip(t):
    assert parse_term(render(t)) == t


@settings(max_examples=300, deadline=None)
@given(formulas())
def test_formula_roundtrip(phi):
    assert parse_formula(F.show(phi)) == phi
