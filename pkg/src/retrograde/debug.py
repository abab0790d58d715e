"""Interactive forward/backward debugging over a line-based protocol.

Requests are JSON objects {"id", "cmd", "args"}; each produces zero or
more event lines followed by exactly one response line {"id", "ok",
"payload"} or {"id", "ok": false, "error": {"code", "message"}}.
Events carry scheduler switches, basic-block entries, termination, and
deadlock as they happen.  One session holds one program, one machine,
and its attached engines; `reset` rewinds to the initial state but
keeps program, engines, schedule, and breakpoints.
"""

from __future__ import annotations

import json
import random
import socket
import threading
from pathlib import Path
from typing import Any, IO

from .bench import bounded_buffer_fixture
from .engines import (
    EngineError,
    EngineGroup,
    ENGINE_NAMES,
    make_engine,
)
from .interp import (
    InterpError,
    Machine,
    RuntimeFault,
    Schedule,
    ScheduleError,
    ScriptedSchedule,
    SeededSchedule,
    init_machine,
    schedule_from_json,
)
from .lang import Assign, Block, If, LangError, Signal, Wait, While, parse_program, render_expr
from .revgen import NeedsStateSaving, gen_reverse

CONTINUE_LIMIT = 200_000


class ProtocolError(Exception):
    def __init__(self, code: str, message: str):
        super().__init__(message)
        self.code = code
        self.message = message


def _loc_str(loc) -> str:
    owner, name, index = loc
    return f"{name}[{index}]" if index is not None else name


def _cids_at_lines(program, lines: set[int]) -> frozenset[int]:
    found: set[int] = set()

    def walk(b: Block) -> None:
        for cmd in b.body:
            if isinstance(cmd, (Assign, Wait, Signal)) and cmd.line in lines:
                found.add(cmd.cid)
            elif isinstance(cmd, While):
                walk(cmd.body)
            elif isinstance(cmd, If):
                walk(cmd.then)
                if cmd.orelse is not None:
                    walk(cmd.orelse)

    for t in program.threads:
        walk(t.body)
    return frozenset(found)


class Session:
    """One debuggable execution plus its protocol front end."""

    def __init__(self) -> None:
        self.program = None
        self.constants: dict[str, int] = {}
        self.machine: Machine | None = None
        self.group: EngineGroup | None = None
        self.engine_names: tuple[str, ...] = ("dynamic-rcg",)
        self.retention = 16
        self.budget = 64
        self.checkpoint_lines: list[int] | None = None
        self.schedule: Schedule | None = None
        self.breakpoints: set[tuple[str, int]] = set()
        self._script_pos = 0
        self._rng: random.Random | None = None
        # (thread, line) of a breakpoint already announced; suppresses a
        # second stop at the same pending command until that thread moves
        self._bp_resume: tuple[str, int] | None = None
        self._end_announced = False

    # -- plumbing -----------------------------------------------------------

    def _require_machine(self) -> Machine:
        if self.machine is None:
            raise ProtocolError("no-program", "load a program first")
        return self.machine

    def _build_machine(self) -> None:
        assert self.program is not None
        self.machine = init_machine(self.program, self.constants)
        checkpoints = None
        if self.checkpoint_lines is not None:
            checkpoints = _cids_at_lines(self.program, set(self.checkpoint_lines))
        engines = [
            make_engine(
                name,
                self.machine,
                checkpoints=checkpoints,
                retention=self.retention,
                budget=self.budget,
            )
            for name in self.engine_names
        ]
        self.group = EngineGroup(self.machine, engines)
        self._script_pos = 0
        self._rng = (
            random.Random(self.schedule.seed)
            if isinstance(self.schedule, SeededSchedule)
            else None
        )
        self._bp_resume = None
        self._end_announced = False

    def _next_scheduled(self, enabled: tuple[str, ...]) -> str | None:
        if isinstance(self.schedule, ScriptedSchedule):
            if self._script_pos < len(self.schedule.choices):
                choice = self.schedule.choices[self._script_pos]
                self._script_pos += 1
                return choice
            return None
        if isinstance(self.schedule, SeededSchedule):
            assert self._rng is not None
            return self._rng.choice(enabled)
        return None

    def _end_events(self, events: list[dict]) -> None:
        m = self.machine
        assert m is not None
        if self._end_announced or m.enabled_threads():
            return
        if m.all_finished():
            events.append({"event": "terminated", "outcome": "finished"})
        else:
            events.append({"event": "deadlock"})
        self._end_announced = True

    def _step_once(self, choice: str, events: list[dict]) -> dict:
        m = self._require_machine()
        assert self.group is not None
        entry, old, raw_events = self.machine.step(choice)
        if self._bp_resume is not None and self._bp_resume[0] == choice:
            self._bp_resume = None  # the pending command just executed
        self.group.after_step(entry, old)
        for ev in raw_events:
            if ev[0] == "switch":
                events.append(
                    {"event": "switch", "seq": ev[1], "from": ev[2], "to": ev[3]}
                )
            else:
                events.append({"event": "block-entry", "thread": ev[1], "block": ev[2]})
        self._end_events(events)
        return {
            "seq": entry.seq,
            "thread": entry.thread,
            "line": entry.line,
            "lhs": _loc_str(entry.lhs),
            "kind": entry.kind,
        }

    # -- command handlers ------------------------------------------------------

    def _cmd_load(self, args: dict, events: list[dict]) -> dict:
        constants = {str(k): int(v) for k, v in (args.get("constants") or {}).items()}
        if "fixture" in args:
            if args["fixture"] != "bounded-buffer":
                raise ProtocolError("bad-request", f"unknown fixture {args['fixture']!r}")
            fixture = bounded_buffer_fixture(
                int(args.get("M", 3)), int(args.get("N", 5)), args.get("src")
            )
            program, constants = fixture.program, fixture.constants
        elif "source" in args:
            program = parse_program(str(args["source"]), tuple(constants))
        elif "path" in args:
            program = parse_program(Path(args["path"]).read_text(), tuple(constants))
        else:
            raise ProtocolError("bad-request", "load needs source, path, or fixture")

        engines = args.get("engines")
        if engines is None and "engine" in args:
            engines = [args["engine"]]
        if engines is not None:
            engines = tuple(str(e) for e in engines)
            bad = [e for e in engines if e not in ENGINE_NAMES]
            if bad:
                raise ProtocolError("bad-request", f"unknown engines: {bad}")
            self.engine_names = engines
        self.retention = int(args.get("retention", self.retention))
        self.budget = int(args.get("budget", self.budget))
        self.checkpoint_lines = args.get("checkpoints")
        self.schedule = (
            schedule_from_json(args["schedule"]) if args.get("schedule") else None
        )
        self.program = program
        self.constants = constants
        self.breakpoints = set()
        self._build_machine()
        return {
            "loaded": True,
            "threads": [t.name for t in program.threads],
            "engines": list(self.engine_names),
            "active": self.group.active_name,
            "step": 0,
        }

    def _cmd_step(self, args: dict, events: list[dict]) -> dict:
        m = self._require_machine()
        enabled = m.enabled_threads()
        if not enabled:
            self._end_events(events)
            raise ProtocolError("not-enabled", "no thread is enabled")
        thread = args.get("thread")
        if thread is None:
            thread = self._next_scheduled(enabled)
        if thread is None:
            if len(enabled) == 1:
                thread = enabled[0]
            else:
                raise ProtocolError(
                    "ambiguous-step",
                    f"several threads are enabled ({', '.join(enabled)}); name one",
                )
        if thread not in enabled:
            raise ProtocolError("not-enabled", f"thread {thread!r} is not enabled")
        entry = self._step_once(thread, events)
        return {"step": m.step_count, "entry": entry}

    def _cmd_back(self, args: dict, events: list[dict]) -> dict:
        m = self._require_machine()
        assert self.group is not None
        n = int(args.get("n", 1))
        if n < 1:
            raise ProtocolError("bad-request", "n must be at least 1")
        if m.step_count == 0:
            raise ProtocolError("at-origin", "already at the initial state")
        done = 0
        while done < n and m.step_count > 0:
            self.group.back()
            done += 1
        self._end_announced = False
        self._bp_resume = None
        return {"stepped_back": done, "step": m.step_count}

    def _cmd_state(self, args: dict, events: list[dict]) -> dict:
        m = self._require_machine()
        globals_: dict[str, Any] = {}
        for d in m.program.globals:
            v = m.values[(None, d.name)]
            globals_[d.name] = list(v) if isinstance(v, list) else v
        threads: dict[str, Any] = {}
        for t in m.program.threads:
            locals_: dict[str, Any] = {}
            for d in t.locals:
                v = m.values[(t.name, d.name)]
                locals_[d.name] = list(v) if isinstance(v, list) else v
            nxt = m.next_command(t.name)
            threads[t.name] = {
                "locals": locals_,
                "line": nxt.line if nxt is not None else None,
                "status": m.thread_status(t.name),
            }
        return {"step": m.step_count, "globals": globals_, "threads": threads}

    def _cmd_enabled(self, args: dict, events: list[dict]) -> dict:
        return {"threads": list(self._require_machine().enabled_threads())}

    def _cmd_revcode(self, args: dict, events: list[dict]) -> dict:
        m = self._require_machine()
        seq = int(args.get("seq", m.step_count))
        if not 1 <= seq <= m.step_count:
            raise ProtocolError("bad-request", f"seq must be in 1..{m.step_count}")
        result = gen_reverse(m.path, seq, self.budget)
        if isinstance(result, NeedsStateSaving):
            return {"available": False, "seq": seq, "reason": result.reason}
        return {
            "available": True,
            "seq": seq,
            "target": _loc_str(result.target),
            "steps": [
                f"{_loc_str(s.lhs)} := {render_expr(s.rhs)}" for s in result.steps
            ],
            "text": result.render(),
            "provenance": result.provenance.to_json(),
        }

    def _cmd_mem(self, args: dict, events: list[dict]) -> dict:
        m = self._require_machine()
        assert self.group is not None
        return {
            "step": m.step_count,
            "state_ints": m.state_ints,
            "ledgers": [led.to_json() for led in self.group.ledgers()],
        }

    def _cmd_path(self, args: dict, events: list[dict]) -> dict:
        m = self._require_machine()
        lo = int(args.get("from", 1))
        hi = int(args.get("to", m.step_count))
        lo = max(lo, 1)
        hi = min(hi, m.step_count)
        entries = []
        for e in m.path.entries[lo - 1 : hi]:
            entries.append(
                {
                    "seq": e.seq,
                    "thread": e.thread,
                    "line": e.line,
                    "lhs": _loc_str(e.lhs),
                    "rhs": render_expr(e.rhs),
                    "kind": e.kind,
                }
            )
        return {"entries": entries, "total": m.step_count}

    def _cmd_break(self, args: dict, events: list[dict]) -> dict:
        m = self._require_machine()
        thread = args.get("thread")
        line = args.get("line")
        if thread is not None or line is not None:
            if not isinstance(thread, str) or thread not in m.conts:
                raise ProtocolError("bad-request", f"unknown thread {thread!r}")
            if not isinstance(line, int) or line < 1:
                raise ProtocolError("bad-request", "line must be a positive integer")
            if args.get("remove"):
                self.breakpoints.discard((thread, line))
            else:
                self.breakpoints.add((thread, line))
        return {"breakpoints": sorted([list(bp) for bp in self.breakpoints])}

    def _cmd_continue(self, args: dict, events: list[dict]) -> dict:
        m = self._require_machine()
        steps = 0
        while steps < CONTINUE_LIMIT:
            enabled = m.enabled_threads()
            if not enabled:
                self._end_events(events)
                reason = "terminated" if m.all_finished() else "deadlock"
                return {"stopped": reason, "step": m.step_count, "steps": steps}
            choice = self._next_scheduled(enabled)
            if choice is None and self.schedule is not None and isinstance(self.schedule, ScriptedSchedule):
                return {"stopped": "schedule-exhausted", "step": m.step_count, "steps": steps}
            if choice is None:
                if len(enabled) == 1:
                    choice = enabled[0]
                else:
                    return {"stopped": "ambiguous", "step": m.step_count, "steps": steps}
            if choice not in enabled:
                raise ScheduleError(f"scheduled thread {choice!r} is not enabled")
            nxt = m.next_command(choice)
            if (
                nxt is not None
                and (choice, nxt.line) in self.breakpoints
                and self._bp_resume != (choice, nxt.line)
            ):
                # stop before the state change at the breakpoint line
                self._bp_resume = (choice, nxt.line)
                return {
                    "stopped": "breakpoint",
                    "thread": choice,
                    "line": nxt.line,
                    "step": m.step_count,
                    "steps": steps,
                }
            self._step_once(choice, events)
            steps += 1
        return {"stopped": "limit", "step": m.step_count, "steps": steps}

    def _cmd_reset(self, args: dict, events: list[dict]) -> dict:
        if self.program is None:
            raise ProtocolError("no-program", "load a program first")
        keep = self.breakpoints
        self._build_machine()
        self.breakpoints = keep
        return {"reset": True, "step": 0}

    _HANDLERS = {
        "load": _cmd_load,
        "step": _cmd_step,
        "back": _cmd_back,
        "state": _cmd_state,
        "enabled": _cmd_enabled,
        "revcode": _cmd_revcode,
        "mem": _cmd_mem,
        "path": _cmd_path,
        "break": _cmd_break,
        "continue": _cmd_continue,
        "reset": _cmd_reset,
    }

    def execute(self, request: Any) -> tuple[dict, list[dict]]:
        """Run one protocol request; returns (response, events)."""
        events: list[dict] = []
        rid = request.get("id") if isinstance(request, dict) else None
        if not isinstance(request, dict) or not isinstance(request.get("cmd"), str):
            return _err(rid, "bad-request", "request must be {id, cmd, args}"), events
        cmd = request["cmd"]
        handler = self._HANDLERS.get(cmd)
        if handler is None:
            return _err(rid, "unknown-command", f"no such command {cmd!r}"), events
        args = request.get("args") or {}
        if not isinstance(args, dict):
            return _err(rid, "bad-request", "args must be an object"), events
        try:
            payload = handler(self, args, events)
        except ProtocolError as e:
            return _err(rid, e.code, e.message), events
        except LangError as e:
            return _err(rid, "parse-error", str(e)), events
        except ScheduleError as e:
            return _err(rid, "schedule-error", str(e)), events
        except RuntimeFault as e:
            return _err(rid, "runtime-fault", str(e)), events
        except EngineError as e:
            return _err(rid, "engine-error", str(e)), events
        except InterpError as e:
            return _err(rid, "interp-error", str(e)), events
        except (KeyError, ValueError, TypeError) as e:
            return _err(rid, "bad-request", f"{type(e).__name__}: {e}"), events
        return {"id": rid, "ok": True, "payload": payload}, events


def execute_command(session: Session, request: Any) -> tuple[dict, list[dict]]:
    return session.execute(request)


def _err(rid: Any, code: str, message: str) -> dict:
    return {"id": rid, "ok": False, "error": {"code": code, "message": message}}


# ---------------------------------------------------------------------------
# Transports
# ---------------------------------------------------------------------------


def _dumps(obj: dict) -> str:
    return json.dumps(obj, separators=(",", ":"))


def handle_line(session: Session, line: str) -> list[str]:
    """One raw request line in, the event/response lines out."""
    try:
        request = json.loads(line)
    except json.JSONDecodeError as e:
        return [_dumps(_err(None, "bad-json", f"malformed request: {e.msg}"))]
    response, events = session.execute(request)
    return [_dumps(ev) for ev in events] + [_dumps(response)]


def serve_stdio(session: Session, infile: IO[str], outfile: IO[str]) -> None:
    """Serve the protocol over text streams until EOF."""
    for raw in infile:
        line = raw.strip()
        if not line:
            continue
        for out in handle_line(session, line):
            outfile.write(out + "\n")
        outfile.flush()


class DebugServer:
    """Line protocol over localhost TCP.  One client at a time; the
    session survives disconnects, so a client may drop and resume."""

    def __init__(self, session: Session, port: int = 0, host: str = "127.0.0.1"):
        self.session = session
        self._sock = socket.create_server((host, port))
        self.host, self.port = self._sock.getsockname()[:2]
        self._stop = threading.Event()

    def serve_forever(self) -> None:
        self._sock.settimeout(0.25)
        try:
            while not self._stop.is_set():
                try:
                    conn, _ = self._sock.accept()
                except TimeoutError:
                    continue
                except OSError:
                    break
                with conn:
                    rfile = conn.makefile("r", encoding="utf-8", newline="\n")
                    wfile = conn.makefile("w", encoding="utf-8", newline="\n")
                    try:
                        serve_stdio(self.session, rfile, wfile)
                    except (ConnectionError, BrokenPipeError, OSError):
                        pass
                    finally:
                        # the socket stays half-open until both wrappers
                        # drop their reference; close them so the client
                        # sees EOF promptly
                        for f in (wfile, rfile):
                            try:
                                f.close()
                            except OSError:
                                pass
        finally:
            self._sock.close()

    def start_background(self) -> threading.Thread:
        thread = threading.Thread(target=self.serve_forever, daemon=True)
        thread.start()
        return thread

    def close(self) -> None:
        self._stop.set()


def serve(
    session: Session,
    *,
    stdio: bool = False,
    port: int | None = None,
    infile: IO[str] | None = None,
    outfile: IO[str] | None = None,
) -> None:
    """Entry point behind `retrograde serve`."""
    if stdio:
        import sys

        serve_stdio(session, infile or sys.stdin, outfile or sys.stdout)
        return
    if port is None:
        raise ValueError("serve needs --stdio or a port")
    server = DebugServer(session, port)
    print(f"listening on {server.host}:{server.port}", flush=True)
    server.serve_forever()
