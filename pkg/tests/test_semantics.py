from fractions import Fraction
from pathlib import Path

import pytest

from utiliproc.kernel import EMPTY, EMPTY_CONTEXT, HOLE, ONE, ZERO, Action, Context, ModelError, Resource
from utiliproc.modelfile import parse_context, parse_model, parse_term

MODELS = Path(__file__).resolve().parent.parent / "models"
R = Resource.of


@pytest.fixture(scope="module")
def banker():
    return parse_model((MODELS / "banker.upm").read_text())


def ctx(m, text):
    return parse_context(text, m)


def moves(sem, primary, outer=EMPTY_CONTEXT, inner=EMPTY_CONTEXT):
    return {(str(t.action), str(t.target)) for t in sem.transitions(primary, outer, inner)}


def test_unit_ticks_forever(banker):
    sem = banker.semantics()
    assert moves(sem, Context(R("r1"), ONE)) == {("1", "({r1} ; 1)")}
    assert [t.rule.tag for t in sem.transitions(Context(EMPTY, ONE))] == ["TICK"]


def test_zero_is_stuck(banker):
    assert len(banker.semantics().transitions(Context(EMPTY, ZERO))) == 0


def test_prefix_applies_mu(banker):
    sem = banker.semantics()
    c = ctx(banker, "(R_B ; present : Banker')")
    assert moves(sem, c) == {("present", "({USB, r2} ; Banker')")}
    assert moves(sem, ctx(banker, "({USB} ; present : Banker')")) == set()


def test_plain_sum_offers_every_branch(banker):
    sem = banker.semantics()
    got = moves(sem, ctx(banker, "(R_C + {r2} ; Client)"))
    assert got == {("logIn", "({Acnt, r1, r2} ; Client')"), ("idle_C", "({Acnt, r1, r2} ; Client')")}


def test_utility_sum_with_unknown_world_ties(banker):
    # alone, both banker worlds take the default value, so both branches stay enabled
    got = moves(banker.semantics(), ctx(banker, "(R_B ; Banker)"))
    assert {a for a, _ in got} == {"present", "idle_B"}


def test_banker_choice_depends_on_surrounding(banker):
    sem = banker.semantics()
    b = ctx(banker, "(R_B ; Banker)")
    assert {str(t.action) for t in sem.transitions(b, ctx(banker, "(R_C ; Client * [])"))} == {"present"}
    assert {str(t.action) for t in sem.transitions(b, ctx(banker, "(R_A ; Attacker * [])"))} == {"idle_B"}


def test_product_needs_a_resource_split(banker):
    sem = banker.semantics()
    got = {str(t.action) for t in sem.transitions(ctx(banker, "(R_C + R_B ; Client * Banker)"))}
    # idle_C and the banker both need r2, so only logIn pairs with a banker action
    assert got == {"logIn.present"}


def test_hole_takes_inner_moves(banker):
    sem = banker.semantics()
    outer = ctx(banker, "(R_C ; Client * [])")
    inner = ctx(banker, "(R_B ; Banker)")
    ts = sem.transitions(outer, EMPTY_CONTEXT, inner)
    assert {str(t.action) for t in ts} == {"logIn"}
    assert all("HOLE" in t.rule.shape() for t in ts)


def test_fig4_utilities_and_shape(banker):
    sem = banker.semantics()
    res = sem.derive_trace(ctx(banker, "(R_C + R_B ; Client * Banker)"), EMPTY_CONTEXT,
                           [Action.of("logIn", "present")])
    assert res.ok and res.multiplicity == 1
    rule = res.steps[0][0].rule
    assert rule.tag == "PROD"
    banker_sum = rule.premises[1]
    assert banker_sum.tag == "SUM" and banker_sum.branch == 0
    assert banker_sum.values == (Fraction(7, 10), Fraction(1, 2))


def test_fig5_utilities(banker):
    sem = banker.semantics()
    res = sem.derive_trace(ctx(banker, "(R_A + R_B ; Attacker * Banker)"), EMPTY_CONTEXT,
                           [Action.of("idle_A", "idle_B")])
    assert res.ok
    banker_sum = res.steps[0][0].rule.premises[1]
    assert banker_sum.branch == 1 and banker_sum.values == (Fraction(1, 10), Fraction(1, 5))


def test_trace_failure_index(banker):
    sem = banker.semantics()
    res = sem.derive_trace(ctx(banker, "(R_B ; Banker)"), ctx(banker, "(R_A ; Attacker * [])"),
                           [Action.of("present")])
    assert not res.ok and res.failed_at == 0


def test_empty_trace_is_trivially_ok(banker):
    res = banker.semantics().derive_trace(ctx(banker, "(R_B ; Banker)"), EMPTY_CONTEXT, [])
    assert res.ok and res.steps == ()


def test_tolerance_turns_close_values_into_ties():
    m = parse_model("""
        atoms { x; }
        actions { a requires {x}; b requires {x}; }
        process P = a : 1 +[u] b : 1;
        utility u { ({x} ; a : 1) = 1; ({x} ; b : 1) = 1.001; }
    """)
    c = Context(R("x"), parse_term("P", m))
    assert {str(t.action) for t in m.semantics().transitions(c)} == {"b"}
    assert {str(t.action) for t in m.semantics(0.01).transitions(c)} == {"a", "b"}


def test_recursion_is_unfolded():
    m = parse_model("""
        atoms { x; }
        actions { a requires {x}; }
        process P = a : P;
    """)
    sem = m.semantics()
    c = Context(R("x"), parse_term("P", m))
    res = sem.derive_trace(c, EMPTY_CONTEXT, [Action.of("a")] * 5)
    assert res.ok and str(res.steps[-1][0].target) == "({x} ; P)"


def test_undeclared_utility_is_model_error(banker):
    from utiliproc.kernel import Sum
    sem = banker.semantics()
    with pytest.raises(ModelError):
        sem.transitions(Context(EMPTY, Sum("missing", (ONE, ONE))))


def test_joint_step_pairs_primary_and_surrounding(banker):
    sem = banker.semantics()
    pairs = sem.joint_step(ctx(banker, "(R_B ; Banker)"), ctx(banker, "(R_C ; Client * [])"))
    assert {(str(p.action), str(s.action)) for p, s in pairs} == {("present", "logIn")}
    assert all(s.target.process.holes == 1 for _, s in pairs)
