"""Command-line front end.

    nilsys run DOC                  run every task of a JSON document
    nilsys scenario NAME            run a built-in scenario and check its expectations
    nilsys scenarios                list built-in scenarios
    nilsys COMMAND DOC [--space X] [--map f] ...   run one task against DOC

DOC is a path or ``scenario:NAME``.  Exit status: 0 pass, 1 fail (or an unmet
expectation), 2 input or resource error.
"""
from __future__ import annotations

import argparse
import json
import sys

from . import __version__
from .document import (
    SCENARIOS,
    TASKS,
    DocumentError,
    exit_code,
    load_document,
    machine_report,
    run_document,
    scenario_document,
)
from .report import jsonable

# single-task flags and the task key each one fills
_TASK_FLAGS = {
    "space": str, "map": str, "translation": str, "metric": str,
    "n": int, "i": int, "k": int, "kind": str, "count": int, "method": str,
}
_JSON_FLAGS = ("corner", "x", "y", "pair", "witness")


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--nmax", type=int, default=None, help="top cube dimension for checks")
    p.add_argument("--budget", type=int, default=None, help="node budget for cube searches")
    p.add_argument("--seed", type=int, default=0, help="seed for randomised suites")
    p.add_argument("--paranoid", type=int, default=None,
                   help="check translations in every dimension up to this one")
    p.add_argument("--report", choices=("text", "machine"), default="text")
    p.add_argument("--timing", action="store_true", help="include elapsed seconds in machine output")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="nilsys", description="Finite nilspace and nilspace-system lab.")
    ap.add_argument("--version", action="version", version=f"nilsys {__version__}")
    sub = ap.add_subparsers(dest="cmd", required=True)

    p = sub.add_parser("run", help="run all tasks in a document")
    p.add_argument("document")
    p.add_argument("--only", action="append", help="run only tasks with this command")
    p.add_argument("--expect", action="store_true", help="exit status follows expectations")
    _common(p)

    p = sub.add_parser("scenario", help="run a built-in scenario")
    p.add_argument("name", choices=SCENARIOS)
    _common(p)

    p = sub.add_parser("scenarios", help="list built-in scenarios")
    p.add_argument("--show", metavar="NAME", help="print the scenario document")

    for cmd in sorted(TASKS):
        p = sub.add_parser(cmd, help=f"single {cmd} task")
        p.add_argument("document")
        for flag, typ in _TASK_FLAGS.items():
            p.add_argument(f"--{flag}", type=typ)
        p.add_argument("--maps", nargs="+", help="map names, in order")
        p.add_argument("--translations", nargs="+")
        p.add_argument("--spaces", nargs="+")
        for flag in _JSON_FLAGS:
            p.add_argument(f"--{flag}", type=json.loads, help="JSON value")
        p.add_argument("--componentwise", action="store_true")
        p.add_argument("--exhaustive", action="store_true")
        _common(p)
    return ap


def _task_from_args(args) -> dict:
    task = {"command": args.cmd}
    for flag in list(_TASK_FLAGS) + ["maps", "translations", "spaces"] + list(_JSON_FLAGS):
        v = getattr(args, flag, None)
        if v is not None:
            task[flag] = v
    if args.componentwise:
        task["componentwise"] = True
    if args.exhaustive:
        task["exhaustive"] = True
    if args.cmd == "hat-hom" and task.get("translations") == ["all"]:
        task["translations"] = "all"
    return task


def _print_text(reports, code: int, out) -> None:
    for j, r in enumerate(reports, 1):
        line = f"{j:2d}. {r.summary()}"
        exp = r.details.get("expectation")
        if exp:
            line += f"  (expectation {exp})"
        print(line, file=out)
        for w in r.witnesses[:1]:
            print(f"      witness: {json.dumps(jsonable(w), sort_keys=True)}", file=out)
        if r.counts:
            counts = ", ".join(f"{k}={v}" for k, v in sorted(r.counts.items()))
            print(f"      counts: {counts}", file=out)
        if exp == "unmet":
            print(f"      {r.details['expectation_failure']}", file=out)
    print(f"exit {code}", file=out)


def main(argv: list[str] | None = None, out=None) -> int:
    out = out or sys.stdout
    args = build_parser().parse_args(argv)
    if args.cmd == "scenarios":
        if args.show:
            print(json.dumps(scenario_document(args.show), indent=1), file=out)
        else:
            for name in SCENARIOS:
                doc = scenario_document(name)
                print(f"{name:18s} {doc.get('description', '')}", file=out)
        return 0

    expectations = False
    try:
        if args.cmd == "run":
            doc = load_document(args.document)
            expectations = args.expect
            only = args.only
        elif args.cmd == "scenario":
            doc = scenario_document(args.name)
            expectations = True
            only = None
        else:
            doc = dict(load_document(args.document))
            doc["tasks"] = [_task_from_args(args)]
            only = None
    except DocumentError as e:
        if args.report == "machine":
            print(json.dumps({"exit": 2, "error": str(e), "reports": []}, sort_keys=True), file=out)
        else:
            print(f"error: {e}", file=sys.stderr)
        return 2

    reports = run_document(doc, nmax=args.nmax, budget=args.budget, seed=args.seed,
                           paranoid=args.paranoid, only=only)
    code = exit_code(reports, expectations)
    if args.report == "machine":
        print(machine_report(doc, reports, code, args.seed, timing=args.timing), file=out)
    else:
        _print_text(reports, code, out)
    return code


if __name__ == "__main__":
    sys.exit(main())
