"""Command-line front end: ``python -m utiliproc <command> MODEL [QUERY ...]``.

Exit status: 0 when every query meets its expectation, 1 for model or query
failures, 2 when the model cannot be read.
"""
from __future__ import annotations

import argparse
import json
import os
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Any, Optional, Sequence

from .equivalence import ContextUniverse, bisim, check_accordance
from .kernel import Action, ModelError, UsageError
from .laws import LAWS, congruence_sampling, invariance_sampling, run_laws
from .logic import CheckConfig, Valuation, satisfies
from .model import ERROR, Model, Query
from .modelfile import load_model
from .semantics import DEFAULT_DEPTH, context_json
from .trust import TrustDomainQuery, trust_domain
from .universes import build_universe
from .validate import validate_model

EXIT_OK, EXIT_FAIL, EXIT_IO = 0, 1, 2


@dataclass
class Options:
    depth: Optional[int] = None
    universe: Optional[str] = None
    mode: Optional[str] = None
    tolerance: Optional[float] = None
    seed: int = 0


@dataclass
class RunResult:
    query: str
    kind: str
    passed: bool
    verdict: Any = None
    details: dict = field(default_factory=dict)
    seconds: float = 0.0

    def to_json(self, timing: bool = True) -> dict:
        out = {"query": self.query, "kind": self.kind, "verdict": self.verdict, "passed": self.passed,
               **self.details}
        if timing:
            out["timing"] = {"seconds": round(self.seconds, 6)}
        return out


def default_depth() -> int:
    env = os.environ.get("UTILIPROC_DEPTH")
    if env:
        try:
            return int(env)
        except ValueError:
            raise UsageError(f"UTILIPROC_DEPTH must be an integer, not {env!r}") from None
    return DEFAULT_DEPTH


def _depth(q: Query, opts: Options) -> int:
    if opts.depth is not None:
        return opts.depth
    return q.get("depth") or default_depth()


def _universe(m: Model, q: Query, opts: Options, depth: int) -> ContextUniverse:
    name = opts.universe or q.get("universe")
    if name is None and not m.universes:
        return build_universe(m, None, depth)
    return build_universe(m, name)


def _mode(q: Query, opts: Options) -> str:
    return opts.mode or q.get("mode") or "global"


def _expect(q: Query, verdict: bool) -> bool:
    return verdict == q.get("expect", True)


def run_check(m: Model, q: Query, opts: Options) -> RunResult:
    depth = _depth(q, opts)
    cfg = CheckConfig(_universe(m, q, opts, depth), depth, _mode(q, opts), Valuation.of(m.atomprops))
    v = satisfies(m.semantics(opts.tolerance), q.get("primary"), q.get("surrounding"), q.get("formula"), cfg)
    return RunResult(q.name, "check", _expect(q, v.holds), v.holds, {
        "primary": context_json(q.get("primary")),
        "surrounding": context_json(q.get("surrounding")),
        "formula": str(q.get("formula")),
        "witness": list(v.witness),
        "depth": depth,
        "mode": cfg.mode,
    })


def run_trace(m: Model, q: Query, opts: Options) -> RunResult:
    depth = _depth(q, opts)
    actions = q.get("actions", ())
    res = m.semantics(opts.tolerance).derive_trace(q.get("primary"), q.get("surrounding"), actions, depth)
    steps = []
    for pt, st in res.steps:
        steps.append({
            "action": list(pt.action.factors),
            "shape": pt.rule.shape(),
            "before": context_json(pt.source),
            "after": context_json(pt.target),
            "derivation": pt.rule.to_json(),
            "surrounding": {"action": list(st.action.factors), "after": context_json(st.target)},
        })
    details: dict = {"actions": [list(a.factors) for a in actions], "steps": steps,
                     "witnesses": res.multiplicity, "depth": depth}
    if not res.ok:
        details["failed_at"] = res.failed_at
    return RunResult(q.name, "trace", _expect(q, res.ok), res.ok, details)


def run_bisim(m: Model, q: Query, opts: Options) -> RunResult:
    depth = _depth(q, opts)
    universe = _universe(m, q, opts, depth)
    v = bisim(m.semantics(opts.tolerance), q.get("left"), q.get("right"), universe, depth)
    return RunResult(q.name, "bisim", _expect(q, v.related), v.related, {
        "left": str(q.get("left")), "right": str(q.get("right")), "depth": depth,
        "universe_size": len(universe), **({"counterexample": v.counterexample.to_json()} if v.counterexample else {}),
    })


def run_trustdomain(m: Model, q: Query, opts: Options) -> RunResult:
    depth = _depth(q, opts)
    mode = _mode(q, opts)
    universe = _universe(m, q, opts, depth) if (opts.universe or q.get("universe") or m.universes) else ContextUniverse(())
    cfg = CheckConfig(universe, depth, mode, Valuation.of(m.atomprops))
    cost = m.costs[q.get("cost")]
    sem = m.semantics(opts.tolerance)
    bounds = [q.get("bound")] if q.get("bound") is not None else []
    levels = list(q.get("levels", ()))
    out = {}
    for b in dict.fromkeys(bounds + levels):
        tq = TrustDomainQuery(q.get("agent"), q.get("formula"), cost, b, tuple(q.get("candidates", ())),
                              q.get("length", 4), depth)
        out[b] = trust_domain(sem, tq, cfg)
    main = out[bounds[0]] if bounds else next(iter(out.values()), [])
    verdict = [m_.index for m_ in main if m_.member]
    details = {
        "agent": context_json(q.get("agent")),
        "formula": str(q.get("formula")),
        "cost": cost.name,
        "bound": str(bounds[0]) if bounds else None,
        "candidates": [r.to_json() for r in main],
        "levels": [{"bound": str(b), "members": [r.index for r in rs if r.member]} for b, rs in out.items()
                   if b in levels],
        "depth": depth,
        "mode": mode,
    }
    return RunResult(q.name, "trustdomain", True, verdict, details)


RUNNERS = {"check": run_check, "trace": run_trace, "bisim": run_bisim, "trustdomain": run_trustdomain}


def run_query(m: Model, q: Query, opts: Options) -> RunResult:
    t = time.perf_counter()
    try:
        r = RUNNERS[q.kind](m, q, opts)
    except (ModelError, UsageError) as exc:
        r = RunResult(q.name, q.kind, False, None, {"error": str(exc)})
    r.seconds = time.perf_counter() - t
    return r


def _worker(args):
    text, name, opts = args
    m, _ = load_model(text)
    return run_query(m, m.queries[name], opts)


# --------------------------------------------------------------------------- output


def emit(payload: dict, fmt: str, out) -> None:
    if fmt == "json":
        out.write(json.dumps(payload, indent=2, sort_keys=False) + "\n")
        return
    for line in _text(payload):
        out.write(line + "\n")


def _text(payload: dict) -> list[str]:
    lines = []
    for d in payload.get("diagnostics", []):
        lines.append(f"{d['line']}:{d['column']}: {d['severity']} [{d['code']}] {d['message']}")
    for r in payload.get("results", []):
        status = "ok" if r.get("passed") else "FAIL"
        lines.append(f"{r.get('query', r.get('name'))} ({r.get('kind', 'law')}): {status} verdict={_short(r.get('verdict', r.get('ok')))}")
        for key in ("error", "witness", "failed_at", "counterexample"):
            if r.get(key) not in (None, []):
                lines.append(f"  {key}: {_short(r[key])}")
        for step in r.get("steps", []):
            lines.append(f"  {'.'.join(step['action']) or '1'}  {step['shape']}  "
                         f"{_ctx(step['before'])} -> {_ctx(step['after'])}")
        for c in r.get("candidates", []):
            lines.append(f"  {'in ' if c['member'] else 'out'} {c['candidate']}"
                         + (f"  trace={c['trace']} cost={c['cost']}" if c["member"] else f"  ({c.get('reason', '')})"))
        for lv in r.get("levels", []):
            lines.append(f"  bound {lv['bound']}: members {lv['members']}")
    for k, v in payload.get("summary", {}).items():
        lines.append(f"{k}: {v}")
    return lines


def _ctx(c: dict) -> str:
    return f"({{{', '.join(c['resource'])}}} ; {c['process']})"


def _short(v) -> str:
    return json.dumps(v) if not isinstance(v, str) else v


# --------------------------------------------------------------------------- commands


def _read(path: str) -> str:
    if path == "-":
        return sys.stdin.read()
    with open(path, encoding="utf-8") as fh:
        return fh.read()


def _load(path: str) -> tuple[Optional[Model], str, list]:
    text = _read(path)
    m, diags = load_model(text)
    return m, text, diags


def cmd_validate(args, opts: Options) -> tuple[dict, int]:
    m, _, diags = _load(args.model)
    if m is not None:
        universe = build_universe(m, opts.universe) if opts.universe else None
        diags = validate_model(m, opts.depth or 4, universe)
    errors = [d for d in diags if d.severity == ERROR]
    payload = {"command": "validate", "model": args.model, "diagnostics": [d.to_json() for d in diags],
               "summary": {"errors": len(errors), "warnings": len(diags) - len(errors)}}
    return payload, EXIT_FAIL if errors else EXIT_OK


def cmd_queries(args, opts: Options) -> tuple[dict, int]:
    kind = args.command
    m, text, diags = _load(args.model)
    if m is not None:
        diags = validate_model(m, obligations=False)
    errors = [d for d in diags if d.severity == ERROR]
    payload: dict = {"command": kind, "model": args.model}
    if errors:
        payload["diagnostics"] = [d.to_json() for d in errors]
        return payload, EXIT_FAIL
    names = args.queries or [q.name for q in m.queries.values() if q.kind == kind]
    missing = [n for n in names if n not in m.queries or m.queries[n].kind != kind]
    if missing:
        payload["error"] = f"no {kind} query named {', '.join(missing)}"
        return payload, EXIT_FAIL
    if args.jobs > 1 and len(names) > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            results = list(pool.map(_worker, [(text, n, opts) for n in names]))
    else:
        results = [run_query(m, m.queries[n], opts) for n in names]
    payload["results"] = [r.to_json() for r in results]
    return payload, EXIT_OK if all(r.passed for r in results) else EXIT_FAIL


def cmd_laws(args, opts: Options) -> tuple[dict, int]:
    m, _, diags = _load(args.model)
    payload: dict = {"command": "laws", "model": args.model}
    if m is None:
        payload["diagnostics"] = [d.to_json() for d in diags]
        return payload, EXIT_FAIL
    depth = opts.depth or 4
    sem = m.semantics(opts.tolerance)
    universe = build_universe(m, opts.universe)
    if args.utility:
        for u in args.utility:
            m.utility(u)
        names: list = list(args.utility)
    else:
        names = [None] + [u.name for u in m.utilities.values()
                          if check_accordance(sem, [u], universe, opts.tolerance).ok]
    results = run_laws(sem, universe, names, depth, term_limit=args.terms)
    payload.update({"universe_size": len(universe), "depth": depth, "utilities": names,
                    "results": [dict(r.to_json(), passed=r.ok) for r in results]})
    ok = all(r.ok for r in results)
    if args.sample:
        actions = [Action.of(a) for a in m.actions]
        cong = congruence_sampling(sem, universe, names, actions, args.samples, min(depth, 3), opts.seed)
        inv = invariance_sampling(sem, universe, names, actions, max(1, args.samples // 2), min(depth, 3), opts.seed)
        payload["congruence"] = cong.to_json()
        payload["invariance"] = inv.to_json()
        ok = ok and cong.ok and inv.ok
    payload["summary"] = {"laws": len(LAWS), "failing": [r.law.name for r in results if not r.ok]}
    return payload, EXIT_OK if ok else EXIT_FAIL


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--depth", type=int, default=None, help="unfolding / refinement depth (default 8, or $UTILIPROC_DEPTH)")
    common.add_argument("--universe", default=None, help="name of the universe to quantify over")
    common.add_argument("--mode", choices=("global", "local"), default=None)
    common.add_argument("--tolerance", type=float, default=None, help="absolute tolerance for utility comparisons")
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--jobs", type=int, default=1)
    common.add_argument("--format", choices=("json", "text"), default="json")
    common.add_argument("--no-timing", action="store_true", help="omit timing fields")

    p = argparse.ArgumentParser(prog="utiliproc", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)
    v = sub.add_parser("validate", parents=[common], help="check a model file")
    v.add_argument("model")
    for kind in ("check", "trace", "bisim", "trustdomain"):
        s = sub.add_parser(kind, parents=[common], help=f"run {kind} queries")
        s.add_argument("model")
        s.add_argument("queries", nargs="*", help="query names (default: all of this kind)")
    lw = sub.add_parser("laws", parents=[common], help="check the algebraic laws over a universe")
    lw.add_argument("model")
    lw.add_argument("--utility", action="append", help="utility to use in sums (repeatable; default: accordant ones)")
    lw.add_argument("--terms", type=int, default=4, help="number of universe processes to instantiate laws with")
    lw.add_argument("--sample", action="store_true", help="also run congruence and invariance sampling")
    lw.add_argument("--samples", type=int, default=100)
    return p


def _strip_timing(obj):
    if isinstance(obj, dict):
        return {k: _strip_timing(v) for k, v in obj.items() if k != "timing"}
    if isinstance(obj, list):
        return [_strip_timing(x) for x in obj]
    return obj


def main(argv: Optional[Sequence[str]] = None, out=None, err=None) -> int:
    out = out or sys.stdout
    err = err or sys.stderr
    args = build_parser().parse_args(argv)
    try:
        opts = Options(args.depth, args.universe, args.mode, args.tolerance, args.seed)
        if args.command == "validate":
            payload, code = cmd_validate(args, opts)
        elif args.command == "laws":
            payload, code = cmd_laws(args, opts)
        else:
            payload, code = cmd_queries(args, opts)
    except OSError as exc:
        err.write(f"utiliproc: {exc}\n")
        return EXIT_IO
    except (ModelError, UsageError) as exc:
        err.write(f"utiliproc: {exc}\n")
        return EXIT_FAIL
    if args.no_timing:
        payload = _strip_timing(payload)
    emit(payload, args.format, out)
    return code


if __name__ == "__main__":
    raise SystemExit(main())
