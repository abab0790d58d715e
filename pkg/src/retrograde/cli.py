"""Command line front end: run, debug, bench, serve."""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .bench import BenchConfig, run_benchmark, write_report_files
from .debug import Session, serve
from .engines import ENGINE_NAMES
from .interp import run, schedule_from_json
from .lang import parse_program


def _parse_consts(pairs):
    consts = {}
    for pair in pairs or []:
        name, _, value = pair.partition("=")
        if not name or not value:
            raise SystemExit(f"bad --const {pair!r}, expected NAME=VALUE")
        consts[name] = int(value)
    return consts


def _load_schedule(text):
    if text is None:
        return None
    if text.startswith("@"):
        text = Path(text[1:]).read_text()
    return schedule_from_json(json.loads(text))


def _load_args(ns) -> dict:
    args: dict = {}
    if getattr(ns, "fixture", None):
        args["fixture"] = ns.fixture
        args["M"] = ns.M
        args["N"] = ns.N
    else:
        args["path"] = ns.file
    consts = _parse_consts(getattr(ns, "const", None))
    if consts:
        args["constants"] = consts
    if getattr(ns, "engine", None):
        args["engines"] = [ns.engine]
    if getattr(ns, "schedule", None):
        sched = ns.schedule
        if sched.startswith("@"):
            sched = Path(sched[1:]).read_text()
        args["schedule"] = json.loads(sched)
    return args


def cmd_run(ns) -> int:
    consts = _parse_consts(ns.const)
    program = parse_program(Path(ns.file).read_text(), tuple(consts))
    schedule = _load_schedule(ns.schedule)
    result = run(program, consts, schedule)
    m = result.machine
    out = {
        "outcome": result.outcome,
        "steps": m.step_count,
        "state": m.snapshot(),
        "aux_log_ints": m.log.aux_log_ints,
    }
    print(json.dumps(out, indent=2))
    return 0 if result.outcome == "finished" else 1


def cmd_debug(ns) -> int:
    # Same wire protocol as serve --stdio, with a human-typable alias
    # layer: "step Producer", "back 2", "break Producer 16", "quit".
    session = Session()
    response, _ = session.execute({"id": 0, "cmd": "load", "args": _load_args(ns)})
    if not response["ok"]:
        print(json.dumps(response), file=sys.stderr)
        return 1
    print(json.dumps(response))
    rid = 1
    for raw in sys.stdin:
        line = raw.strip()
        if not line:
            continue
        if line in ("quit", "exit"):
            break
        if line.startswith("{"):
            try:
                request = json.loads(line)
            except json.JSONDecodeError:
                print(json.dumps({"id": None, "ok": False, "error": {"code": "bad-json", "message": "malformed request"}}))
                continue
        else:
            words = line.split()
            cmd, rest = words[0], words[1:]
            args: dict = {}
            if cmd == "step" and rest:
                args["thread"] = rest[0]
            elif cmd == "back" and rest:
                args["n"] = int(rest[0])
            elif cmd == "revcode" and rest:
                args["seq"] = int(rest[0])
            elif cmd == "break" and rest:
                args["thread"] = rest[0]
                args["line"] = int(rest[1])
                if "remove" in rest[2:]:
                    args["remove"] = True
            elif cmd == "path" and rest:
                args["from"] = int(rest[0])
                if len(rest) > 1:
                    args["to"] = int(rest[1])
            request = {"id": rid, "cmd": cmd, "args": args}
            rid += 1
        response, events = session.execute(request)
        for ev in events:
            print(json.dumps(ev))
        print(json.dumps(response))
    return 0


def cmd_bench(ns) -> int:
    engines = tuple(ENGINE_NAMES) if ns.engines == "all" else tuple(ns.engines.split(","))
    config = BenchConfig(
        fixture=ns.fixture,
        M=ns.M,
        N=ns.N,
        schedule=ns.schedule,
        engines=engines,
        retention=ns.retention,
    )
    report = run_benchmark(config)
    if ns.out:
        csv_file, json_file = write_report_files(report, ns.out)
        print(f"wrote {csv_file} and {json_file}")
    else:
        print(report.to_csv(), end="")
    if not report.functional_ok:
        print("functional check FAILED", file=sys.stderr)
        return 1
    bad = [r.engine for r in report.rows if r.match is False]
    if bad:
        print(f"closed-form mismatch: {', '.join(bad)}", file=sys.stderr)
        return 1
    return 0


def cmd_serve(ns) -> int:
    session = Session()
    response, _ = session.execute({"id": 0, "cmd": "load", "args": _load_args(ns)})
    if not response["ok"]:
        print(json.dumps(response), file=sys.stderr)
        return 1
    if ns.stdio:
        serve(session, stdio=True)
    else:
        serve(session, port=ns.port)
    return 0


def _add_program_args(p, positional=True):
    if positional:
        p.add_argument("file", nargs="?", help="program file (.mcl)")
    p.add_argument("--fixture", choices=["bounded-buffer"], help="use a built-in fixture")
    p.add_argument("--M", type=int, default=3, help="fixture buffer size")
    p.add_argument("--N", type=int, default=5, help="fixture item count")
    p.add_argument("--const", action="append", metavar="NAME=VALUE", help="bind a named constant")
    p.add_argument("--schedule", help="schedule JSON or @file")


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="retrograde", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run a program to completion")
    p_run.add_argument("file")
    p_run.add_argument("--const", action="append", metavar="NAME=VALUE")
    p_run.add_argument("--schedule", help="schedule JSON or @file")
    p_run.set_defaults(func=cmd_run)

    p_debug = sub.add_parser("debug", help="interactive protocol session on stdin/stdout")
    _add_program_args(p_debug)
    p_debug.add_argument("--engine", choices=ENGINE_NAMES, default="dynamic-rcg")
    p_debug.set_defaults(func=cmd_debug)

    p_bench = sub.add_parser("bench", help="measure engines against closed forms")
    p_bench.add_argument("--fixture", default="bounded-buffer", choices=["bounded-buffer"])
    p_bench.add_argument("--M", type=int, default=3)
    p_bench.add_argument("--N", type=int, default=5)
    p_bench.add_argument("--schedule", default="s-opt", help="s-opt, s-seq, or schedule JSON")
    p_bench.add_argument("--engines", default="all", help='"all" or comma-separated names')
    p_bench.add_argument("--retention", type=int, default=16)
    p_bench.add_argument("--out", help="CSV path; a JSON twin is written alongside")
    p_bench.set_defaults(func=cmd_bench)

    p_serve = sub.add_parser("serve", help="serve the debug protocol")
    _add_program_args(p_serve)
    p_serve.add_argument("--engine", choices=ENGINE_NAMES, default="dynamic-rcg")
    group = p_serve.add_mutually_exclusive_group(required=True)
    group.add_argument("--port", type=int)
    group.add_argument("--stdio", action="store_true")
    p_serve.set_defaults(func=cmd_serve)

    ns = parser.parse_args(argv)
    if ns.command in ("debug", "serve") and not ns.file and not ns.fixture:
        parser.error("give a program file or --fixture")
    return ns.func(ns)


if __name__ == "__main__":
    sys.exit(main())
