import io
import json
import subprocess
import sys
from pathlib import Path

import pytest

from utiliproc import cli

ROOT = Path(__file__).resolve().parent.parent
BANKER = str(ROOT / "models" / "banker.upm")
LAWS = str(ROOT / "models" / "laws.upm")
TRUST = str(ROOT / "models" / "trust.upm")


def run(*argv, stdin=None, monkeypatch=None):
    out, err = io.StringIO(), io.StringIO()
    if stdin is not None:
        monkeypatch.setattr(sys, "stdin", io.StringIO(stdin))
    code = cli.main(list(argv), out=out, err=err)
    return code, out.getvalue(), err.getvalue()


def payload(*argv, **kw):
    code, out, _ = run(*argv, **kw)
    return code, json.loads(out)


def test_validate_banker():
    code, p = payload("validate", BANKER)
    assert code == 0 and p["summary"]["errors"] == 0


def test_validate_unknown_atom(tmp_path):
    f = tmp_path / "bad.upm"
    f.write_text("atoms { x; }\nactions { a requires {y}; }\n")
    code, p = payload("validate", str(f))
    assert code == 1
    assert [d["code"] for d in p["diagnostics"]] == ["UNDECLARED_ATOM"]


def test_missing_file():
    code, out, err = run("validate", str(ROOT / "nope.upm"))
    assert code == 2 and out == "" and "nope.upm" in err


def test_stdin(monkeypatch):
    text = Path(BANKER).read_text()
    code, p = payload("check", "-", "client-present", stdin=text, monkeypatch=monkeypatch)
    assert code == 0 and p["results"][0]["verdict"] is True


def test_check_queries():
    code, p = payload("check", BANKER, "--no-timing")
    assert code == 0
    assert [(r["query"], r["verdict"]) for r in p["results"]] == [("client-present", True), ("attacker-no-present", True)]
    assert p["results"][0]["witness"]


def test_unknown_query():
    code, p = payload("check", BANKER, "fig4")
    assert code == 1 and "no check query named fig4" in p["error"]


def test_false_formula_fails(tmp_path):
    f = tmp_path / "m.upm"
    f.write_text(Path(BANKER).read_text() + "\nquery never : check { primary = (R_B ; Banker); "
                 "surrounding = (e ; []); formula = false; }\n")
    code, p = payload("check", str(f), "never")
    assert code == 1 and p["results"][0]["verdict"] is False


def test_trace_output():
    code, p = payload("trace", BANKER, "fig4", "fig5", "--no-timing")
    assert code == 0
    fig4, fig5 = p["results"]
    assert fig4["steps"][0]["action"] == ["logIn", "present"]
    assert fig4["steps"][0]["derivation"]["premises"][1]["utilities"] == ["7/10", "1/2"]
    assert fig5["steps"][0]["action"] == ["idle_A", "idle_B"]


def test_failing_trace_reports_index():
    code, p = payload("trace", BANKER, "banker-in-attacker")
    # expected to fail, so the query passes
    assert code == 0 and p["results"][0]["verdict"] is False and p["results"][0]["failed_at"] == 0


def test_empty_trace(tmp_path):
    f = tmp_path / "m.upm"
    f.write_text(Path(BANKER).read_text() + "\nquery idle : trace { primary = (R_B ; Banker); "
                 "surrounding = (e ; []); actions = []; }\n")
    code, p = payload("trace", str(f), "idle")
    assert code == 0 and p["results"][0]["steps"] == []


def test_bisim_queries():
    code, p = payload("bisim", LAWS, "--no-timing")
    assert code == 0
    by = {r["query"]: r for r in p["results"]}
    assert by["unit-product"]["verdict"] is True
    assert by["prefix-differs"]["verdict"] is False and by["prefix-differs"]["counterexample"]


def test_trustdomain_query():
    code, p = payload("trustdomain", TRUST, "--no-timing")
    r = p["results"][0]
    assert code == 0 and r["verdict"] == [0]
    assert [c["member"] for c in r["candidates"]] == [True, False]
    assert [lv["members"] for lv in r["levels"]] == [[], [0], [0]]


def test_empty_universe_for_quantified_formula(tmp_path):
    f = tmp_path / "m.upm"
    f.write_text("atoms { x; } actions { a requires {x}; } process P = a : 1; universe none { }\n"
                 "query q : check { primary = ({x} ; P); surrounding = (e ; []); formula = true -* true; }\n")
    code, p = payload("check", str(f), "--universe", "none")
    assert code == 1 and "universe is empty" in p["results"][0]["error"]


def test_text_and_json_carry_the_same_content():
    _, p = payload("trace", BANKER, "fig4", "--no-timing")
    code, text, _ = run("trace", BANKER, "fig4", "--no-timing", "--format", "text")
    assert code == 0
    assert "fig4 (trace): ok verdict=true" in text
    step = p["results"][0]["steps"][0]
    assert f"logIn.present  {step['shape']}" in text


def test_determinism_modulo_timing():
    a = run("bisim", LAWS, "--no-timing")[1]
    b = run("bisim", LAWS, "--no-timing")[1]
    assert a == b
    timed = json.loads(run("bisim", LAWS)[1])
    assert all("timing" in r for r in timed["results"])
    assert json.dumps(cli._strip_timing(timed), indent=2) + "\n" == a


def test_jobs_preserve_order():
    serial = run("check", BANKER, "--no-timing")[1]
    parallel = run("check", BANKER, "--no-timing", "--jobs", "2")[1]
    assert serial == parallel


def test_depth_from_environment(monkeypatch):
    monkeypatch.setenv("UTILIPROC_DEPTH", "3")
    _, p = payload("check", BANKER, "client-present")
    assert p["results"][0]["depth"] == 3
    _, p = payload("check", BANKER, "client-present", "--depth", "5")
    assert p["results"][0]["depth"] == 5


def test_bad_depth_environment(monkeypatch):
    monkeypatch.setenv("UTILIPROC_DEPTH", "deep")
    code, p = payload("check", BANKER, "client-present")
    assert code == 1 and "UTILIPROC_DEPTH" in p["results"][0]["error"]


def test_laws_command():
    code, p = payload("laws", LAWS, "--depth", "3", "--terms", "3", "--no-timing")
    assert code == 0 and p["utilities"] == [None, "uC"] and p["summary"]["failing"] == []
    code, p = payload("laws", LAWS, "--depth", "3", "--terms", "2", "--utility", "bad")
    assert code == 1 and "sum-unit" in p["summary"]["failing"]


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "utiliproc", "validate", BANKER, "--format", "text"],
                          capture_output=True, text=True)
    assert proc.returncode == 0 and "errors: 0" in proc.stdout
