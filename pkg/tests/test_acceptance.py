"""Acceptance criteria, one test each, with their runtime budgets.

Every test prints a single ``criterion N: PASS|FAIL`` line (outside pytest's
capture) so ``pytest tests/test_acceptance.py`` doubles as a report.
"""
import io
import json
import time
from contextlib import contextmanager
from fractions import Fraction
from pathlib import Path

import pytest

from utiliproc import cli
from utiliproc.formula import Not, Diamond, TRUE
from utiliproc.kernel import Action
from utiliproc.laws import (
    LAWS_BY_NAME,
    congruence_sampling,
    formula_templates,
    invariance_sampling,
    run_laws,
)
from utiliproc.logic import CheckConfig, satisfies
from utiliproc.modelfile import load_model, parse_model
from utiliproc.trust import TrustDomainQuery, members, trust_domain
from utiliproc.universes import build_universe
from utiliproc.validate import errors, validate_model

ROOT = Path(__file__).resolve().parent.parent
MODELS = ROOT / "models"
FIXTURES = Path(__file__).resolve().parent / "fixtures"


def model(name):
    return parse_model((MODELS / name).read_text())


@pytest.fixture
def criterion(capsys):
    @contextmanager
    def run(number, title, budget=None):
        start = time.perf_counter()
        ok = False
        try:
            yield
            ok = True
        finally:
            elapsed = time.perf_counter() - start
            within = budget is None or elapsed < budget
            status = "PASS" if ok and within else "FAIL"
            limit = f" (budget {budget:g} s)" if budget else ""
            with capsys.disabled():
                print(f"\ncriterion {number}: {status}  {title}  {elapsed:.2f} s{limit}")
        assert within, f"criterion {number} took {elapsed:.2f} s, budget {budget} s"

    return run


def _sum_values(rule):
    """Utility vectors of every SUM node in a derivation, left to right."""
    out = []
    if rule["rule"] == "SUM" and "utilities" in rule:
        out.append((rule["branch"], [Fraction(v) for v in rule["utilities"]]))
    for p in rule.get("premises", []):
        out.extend(_sum_values(p))
    return out


def test_criterion_1_golden_derivations(criterion):
    with criterion(1, "Banker/Client and Banker/Attacker joint steps", budget=1.0):
        m = model("banker.upm")
        results = {q: cli.run_query(m, m.queries[q], cli.Options()).to_json() for q in ("fig4", "fig5")}

        fig4 = results["fig4"]
        assert fig4["passed"] and len(fig4["steps"]) == 1
        step = fig4["steps"][0]
        assert step["action"] == ["logIn", "present"]
        assert step["before"] == {"resource": ["Acnt", "USB", "r1", "r2"], "process": "Client * Banker"}
        assert step["shape"].startswith("PROD(") and step["shape"].count("PREFIX") == 2
        # the banker's choice: present (7/10) beats idle_B (1/2)
        assert _sum_values(step["derivation"]) == [(0, [Fraction(7, 10), Fraction(1, 2)])]

        fig5 = results["fig5"]
        assert fig5["passed"] and len(fig5["steps"]) == 1
        step = fig5["steps"][0]
        assert step["action"] == ["idle_A", "idle_B"]
        assert step["before"] == {"resource": ["USB", "r1", "r2"], "process": "Attacker * Banker"}
        # idle_B (2/10) beats present (1/10)
        assert _sum_values(step["derivation"]) == [(1, [Fraction(1, 10), Fraction(2, 10)])]


def test_criterion_2_present_verdicts(criterion):
    with criterion(2, "<present> under Client, not <present> under Attacker, flip on swapped table", budget=1.0):
        text = (MODELS / "banker.upm").read_text()
        m = parse_model(text)
        sem = m.semantics()
        q1, q2 = m.queries["client-present"], m.queries["attacker-no-present"]
        cfg = CheckConfig(depth=8)
        present = Diamond(Action.of("present"), TRUE)
        assert satisfies(sem, q1.get("primary"), q1.get("surrounding"), present, cfg).holds
        assert satisfies(sem, q2.get("primary"), q2.get("surrounding"), Not(present), cfg).holds

        swapped = (text.replace("= 0.7;", "= @;").replace("= 0.5;", "= 0.7;").replace("= @;", "= 0.5;"))
        assert swapped != text
        m2 = parse_model(swapped)
        assert not satisfies(m2.semantics(), q1.get("primary"), q1.get("surrounding"), present, cfg).holds


def test_criterion_3_law_suite(criterion):
    with criterion(3, "eight laws at depth 4, law 3 broken by an inverted utility", budget=30.0):
        m = model("laws.upm")
        sem = m.semantics()
        universe = build_universe(m)
        assert len(universe) >= 30
        good = run_laws(sem, universe, [None, "uC"], depth=4)
        assert [r.law.number for r in good] == list(range(1, 9))
        assert all(r.ok and r.checked > 0 for r in good), [r.to_json() for r in good if not r.ok]

        bad = run_laws(sem, universe, ["bad"], depth=4, laws=[LAWS_BY_NAME["sum-unit"]])
        assert bad[0].law.number == 3 and not bad[0].ok
        instance = bad[0].failures[0]
        assert instance["utility"] == "bad" and instance["left"].endswith("+[bad] 0")
        assert instance["counterexample"] and "action" in instance["counterexample"][0]


def test_criterion_4_congruence_sampling(criterion):
    with criterion(4, "100 related pairs stay related under prefix, product, choice, substitution", budget=60.0):
        m = model("laws.upm")
        report = congruence_sampling(m.semantics(), build_universe(m), [None, "uC"],
                                     [Action.of(a) for a in m.actions], samples=100, depth=3, seed=0)
        assert report.checked == 100 * 4
        assert report.ok, report.counterexamples[:3]


def test_criterion_5_invariance_sampling(criterion):
    with criterion(5, "50 bisimilar pairs agree on every template formula", budget=60.0):
        m = model("laws.upm")
        actions = [Action.of(a) for a in m.actions]
        report = invariance_sampling(m.semantics(), build_universe(m), [None, "uC"], actions,
                                     samples=50, depth=3, seed=0)
        per_pair = len(formula_templates(actions + [Action(())]))
        assert report.checked == 50 * per_pair
        assert report.ok, report.counterexamples[:3]


def test_criterion_6_trust_domain(criterion):
    with criterion(6, "trust domain holds Lawyer*Client, not Lawyer*Attacker; nested over bounds", budget=10.0):
        m = model("trust.upm")
        sem = m.semantics()
        q = m.queries["banker-domain"]
        cfg = CheckConfig(build_universe(m), 6)
        client, attacker = q.get("candidates")
        assert "Client" in str(client.process) and "Lawyer" in str(client.process)
        assert "Attacker" in str(attacker.process)

        def domain(bound):
            tq = TrustDomainQuery(q.get("agent"), q.get("formula"), m.costs[q.get("cost")], Fraction(bound),
                                  (client, attacker), q.get("length"), 6)
            return members(trust_domain(sem, tq, cfg))

        assert domain(q.get("bound")) == (client,)
        nested = [set(domain(b)) for b in q.get("levels")]
        assert len(nested) == 3
        assert all(a <= b for a, b in zip(nested, nested[1:]))
        assert attacker not in nested[-1] and client in nested[-1]


NEGATIVE = {
    "mu_overlap.upm": "MU_OVERLAP",
    "mu_homomorphism.upm": "MU_HOMOMORPHISM",
    "unguarded.upm": "UNGUARDED_RECURSION",
    "valuation_open.upm": "VALUATION_NOT_CLOSED",
    "accordance.upm": "ACCORDANCE_C3",
}


def test_criterion_7_validator(criterion):
    with criterion(7, "shipped models clean, each fixture yields exactly its code"):
        for path in sorted(MODELS.glob("*.upm")):
            m, diags = load_model(path.read_text())
            assert m is not None, diags
            assert errors(validate_model(m)) == [], path.name
        for name, code in NEGATIVE.items():
            m, diags = load_model((FIXTURES / name).read_text())
            assert m is not None, diags
            codes = {d.code for d in validate_model(m)}
            assert codes == {code}, (name, codes)


def _suite(timing):
    out = []
    for path in sorted(MODELS.glob("*.upm")):
        for kind in ("check", "trace", "bisim", "trustdomain"):
            buf = io.StringIO()
            argv = [kind, str(path)] + ([] if timing else ["--no-timing"])
            cli.main(argv, out=buf)
            out.append(buf.getvalue())
    return out


def test_criterion_8_determinism(criterion):
    with criterion(8, "two query-suite runs are byte-identical apart from timing"):
        a, b = _suite(False), _suite(False)
        assert a == b
        timed = [_suite(True) for _ in range(2)]
        stripped = [[json.dumps(cli._strip_timing(json.loads(s)), indent=2) + "\n" for s in run] for run in timed]
        assert stripped[0] == stripped[1] == a
        assert sum('"results"' in s for s in a) >= 5
