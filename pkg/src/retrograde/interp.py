"""Deterministic interpreter with an execution path and a replay log.

State changes happen one assignment at a time.  A scheduler choice
names a thread; the interpreter drains that thread's pending control
flow (loop tests, branch picks) locally and then performs exactly one
assignment, wait-decrement, or signal-increment.  Each state change
appends a :class:`PathEntry` recording *where* the write landed and the
concretized right-hand side, but never the overwritten value: restoring
old values is the backtracking engines' job.

Two auxiliary records make executions reproducible and auditable:

* ``switches``: (seq, from_thread, to_thread) whenever the scheduler
  picks a different thread than last time (the first pick included)
* ``block_entries``: (thread, block_id) whenever a thread begins a
  command that heads a basic block

Replaying the switch list against the same program must regenerate the
block-entry list exactly; a mismatch means the replay diverged.

Integers are checked signed 64-bit.  Division and modulo truncate
toward zero and fault on a zero divisor.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field, replace
from typing import Any, Iterable, Union

from .lang import (
    EXACT_DIV,
    Assign,
    Bin,
    Block,
    BoolLit,
    Cell,
    Command,
    Declaration,
    Expr,
    Guard,
    If,
    Lit,
    LocKey,
    Not,
    Program,
    Signal,
    Skip,
    Var,
    Index,
    Wait,
    While,
    block_heads,
    scope_map,
)

INT_MIN = -(2**63)
INT_MAX = 2**63 - 1

# Safety bound on control-flow work (guard tests, branch picks) a single
# step may perform before reaching a state change.  Only a loop that
# changes no state can exceed it.
MAX_CONTROL_STEPS = 10_000


class InterpError(Exception):
    pass


class RuntimeFault(InterpError):
    """Run-time error in the debuggee: overflow, bad index, zero divisor."""


class ExactDivisionFault(RuntimeFault):
    """An inverted multiplication did not divide evenly.

    Raised only when applying generated reverse code; indicates the
    generator accepted a multiplication it could not soundly invert."""


class ScheduleError(InterpError):
    pass


class ReplayDivergence(InterpError):
    pass


# Concretized expressions: literals, resolved cells, operators.
CExpr = Union[Lit, Cell, Bin]

PLAIN_ASSIGN = "plain-assign"
WAIT_DECREMENT = "wait-decrement"
SIGNAL_INCREMENT = "signal-increment"


@dataclass(frozen=True, slots=True)
class PathEntry:
    """One state change.  ``lhs`` is the concrete written location and
    ``rhs`` the right-hand side with every read resolved to a Cell (or
    folded to a literal, for constants).  No data values are stored."""

    seq: int
    thread: str
    command_id: int
    line: int
    lhs: LocKey
    rhs: CExpr
    kind: str


@dataclass(slots=True)
class ExecutionPath:
    """The sequence of state changes of one execution.

    ``complete_from_start`` distinguishes a full history from a window
    cut out of a longer run; reverse-code generation treats the two
    differently (a window has no initial definitions to fall back on).
    """

    program: Program
    constants: dict[str, int]
    entries: list[PathEntry] = field(default_factory=list)
    complete_from_start: bool = True

    def __len__(self) -> int:
        return len(self.entries)

    def entry(self, seq: int) -> PathEntry:
        if not 1 <= seq <= len(self.entries):
            raise InterpError(f"no path entry with seq {seq}")
        return self.entries[seq - 1]

    def suffix(self, from_seq: int) -> "ExecutionPath":
        """A copy of entries from ``from_seq`` on, renumbered from 1 and
        marked as not starting at the initial state."""
        tail = [
            replace(e, seq=i)
            for i, e in enumerate(self.entries[from_seq - 1 :], start=1)
        ]
        return ExecutionPath(self.program, dict(self.constants), tail, complete_from_start=False)


@dataclass(slots=True)
class ExecutionLog:
    """Replay log: scheduler switches plus block entries for cross-checking."""

    switches: list[tuple[int, str | None, str]] = field(default_factory=list)
    block_entries: list[tuple[str, int]] = field(default_factory=list)
    length: int = 0

    @property
    def aux_log_ints(self) -> int:
        # Two ints per block entry, three per switch; thread names count
        # as one int apiece (interned ids in a compact encoding).
        return 2 * len(self.block_entries) + 3 * len(self.switches)

    def to_json(self) -> dict[str, Any]:
        return {
            "length": self.length,
            "switches": [[s, f, t] for (s, f, t) in self.switches],
            "block_entries": [[t, b] for (t, b) in self.block_entries],
        }

    @classmethod
    def from_json(cls, obj: dict[str, Any]) -> "ExecutionLog":
        return cls(
            switches=[(s, f, t) for s, f, t in obj["switches"]],
            block_entries=[(t, b) for t, b in obj["block_entries"]],
            length=obj["length"],
        )


# ---------------------------------------------------------------------------
# Schedules
# ---------------------------------------------------------------------------


@dataclass(frozen=True, slots=True)
class ScriptedSchedule:
    choices: tuple[str, ...]


@dataclass(frozen=True, slots=True)
class SeededSchedule:
    seed: int


Schedule = Union[ScriptedSchedule, SeededSchedule]


def schedule_from_json(obj: dict[str, Any]) -> Schedule:
    kind = obj.get("kind")
    if kind == "scripted":
        choices = obj["choices"]
        if not isinstance(choices, list) or not all(isinstance(c, str) for c in choices):
            raise ScheduleError("scripted schedule needs a list of thread names")
        return ScriptedSchedule(tuple(choices))
    if kind == "seeded":
        seed = obj["seed"]
        if not isinstance(seed, int) or not 0 <= seed < 2**64:
            raise ScheduleError("seeded schedule needs an unsigned 64-bit seed")
        return SeededSchedule(seed)
    raise ScheduleError(f"unknown schedule kind {kind!r}")


def schedule_to_json(schedule: Schedule) -> dict[str, Any]:
    if isinstance(schedule, ScriptedSchedule):
        return {"kind": "scripted", "choices": list(schedule.choices)}
    return {"kind": "seeded", "seed": schedule.seed}


# ---------------------------------------------------------------------------
# Machine
# ---------------------------------------------------------------------------

# Continuation: a cons list of pending commands, innermost first.
Cont = Union[tuple[Command, "Cont"], None]

RUNNABLE = "runnable"
BLOCKED = "blocked"
FINISHED = "finished"


def _checked(op: str, a: int, b: int) -> int:
    if op == "+":
        v = a + b
    elif op == "-":
        v = a - b
    elif op == "*":
        v = a * b
    elif op in ("/", EXACT_DIV):
        if b == 0:
            raise RuntimeFault("division by zero")
        v = abs(a) // abs(b)
        if (a < 0) != (b < 0):
            v = -v
        if op == EXACT_DIV and v * b != a:
            raise ExactDivisionFault(f"{a} is not a multiple of {b}")
    elif op == "%":
        if b == 0:
            raise RuntimeFault("modulo by zero")
        q = abs(a) // abs(b)
        if (a < 0) != (b < 0):
            q = -q
        v = a - q * b
    else:
        raise InterpError(f"unknown operator {op!r}")
    if not INT_MIN <= v <= INT_MAX:
        raise RuntimeFault(f"overflow in {a} {op} {b}")
    return v


class Machine:
    """A running program: data values, one continuation per thread, and
    the recorded path/log.  Use :func:`init_machine` to build one."""

    def __init__(self, program: Program, constants: dict[str, int]):
        missing = [c for c in program.constants if c not in constants]
        if missing:
            raise InterpError(f"missing constant values: {missing}")
        self.program = program
        self.constants = {c: int(constants[c]) for c in program.constants}
        self.scope = scope_map(program)
        self.block_heads = block_heads(program)
        self.threads = tuple(t.name for t in program.threads)

        self.values: dict[tuple[str | None, str], int | list[int]] = {}
        self.array_sizes: dict[tuple[str | None, str], int] = {}
        for d in program.globals:
            self._init_decl(None, d)
        for t in program.threads:
            for d in t.locals:
                self._init_decl(t.name, d)

        self.conts: dict[str, Cont] = {t.name: (t.body, None) for t in program.threads}
        self.last_thread: str | None = None
        self.path = ExecutionPath(program, dict(self.constants))
        self.log = ExecutionLog()
        # One record per step: (thread, prior cont, prior last_thread,
        # prior block-entry count, prior switch count).
        self.undo: list[tuple[str, Cont, str | None, int, int]] = []
        self._pre_step_control: tuple[dict[str, Cont], str | None] = (
            dict(self.conts),
            None,
        )

    # -- initialization ------------------------------------------------------

    def _resolve_size(self, d: Declaration) -> int:
        if isinstance(d.size, str):
            size = self.constants[d.size]
        else:
            size = d.size  # type: ignore[assignment]
        if size is None or size <= 0:
            raise InterpError(f"array {d.name!r} needs a positive size, got {size}")
        return size

    def _init_decl(self, owner: str | None, d: Declaration) -> None:
        key = (owner, d.name)
        if d.is_array:
            size = self._resolve_size(d)
            self.array_sizes[key] = size
            if d.init is None:
                self.values[key] = [0] * size
            else:
                if len(d.init) != size:  # type: ignore[arg-type]
                    raise InterpError(
                        f"array {d.name!r} has size {size} but {len(d.init)} initializers"  # type: ignore[arg-type]
                    )
                self.values[key] = list(d.init)  # type: ignore[arg-type]
        elif d.init is None:
            self.values[key] = 0
        elif isinstance(d.init, str):
            self.values[key] = self.constants[d.init]
        else:
            self.values[key] = d.init

    @property
    def state_ints(self) -> int:
        """Number of live integers: scalars plus array elements."""
        return sum(
            self.array_sizes.get(k, 1) if isinstance(v, list) else 1
            for k, v in self.values.items()
        )

    @property
    def step_count(self) -> int:
        return len(self.path.entries)

    # -- locations -------------------------------------------------------------

    def read_loc(self, loc: LocKey) -> int:
        owner, name, index = loc
        v = self.values.get((owner, name))
        if v is None:
            raise RuntimeFault(f"no such location {loc}")
        if index is None:
            if isinstance(v, list):
                raise RuntimeFault(f"array {name!r} read without an index")
            return v
        if not isinstance(v, list):
            raise RuntimeFault(f"scalar {name!r} read with an index")
        if not 0 <= index < len(v):
            raise RuntimeFault(f"index {index} out of bounds for {name}[{len(v)}]")
        return v[index]

    def write_loc(self, loc: LocKey, value: int) -> None:
        owner, name, index = loc
        if not INT_MIN <= value <= INT_MAX:
            raise RuntimeFault(f"overflow writing {value} to {loc}")
        v = self.values.get((owner, name))
        if index is None:
            if isinstance(v, list):
                raise RuntimeFault(f"array {name!r} written without an index")
            self.values[(owner, name)] = value
        else:
            if not isinstance(v, list):
                raise RuntimeFault(f"scalar {name!r} written with an index")
            if not 0 <= index < len(v):
                raise RuntimeFault(f"index {index} out of bounds for {name}[{len(v)}]")
            v[index] = value

    def initial_value(self, loc: LocKey) -> int:
        """The location's value at machine start, from its declaration."""
        owner, name, index = loc
        decls: Iterable[Declaration]
        if owner is None:
            decls = self.program.globals
        else:
            decls = next(t.locals for t in self.program.threads if t.name == owner)
        for d in decls:
            if d.name == name:
                if d.init is None:
                    return 0
                if isinstance(d.init, tuple):
                    if index is None or not 0 <= index < len(d.init):
                        raise InterpError(f"bad initial lookup {loc}")
                    return d.init[index]
                if isinstance(d.init, str):
                    return self.constants[d.init]
                return d.init
        raise InterpError(f"no declaration for {loc}")

    # -- expression evaluation ---------------------------------------------------

    def _concretize(self, thread: str, e: Expr) -> tuple[CExpr, int]:
        if isinstance(e, Lit):
            return e, e.value
        if isinstance(e, Var):
            if e.name in self.constants:
                v = self.constants[e.name]
                return Lit(v), v
            owner = self.scope[thread][e.name]
            loc = (owner, e.name, None)
            return Cell(owner, e.name, None), self.read_loc(loc)
        if isinstance(e, Index):
            _, idx = self._concretize(thread, e.index)
            owner = self.scope[thread][e.name]
            loc = (owner, e.name, idx)
            return Cell(owner, e.name, idx), self.read_loc(loc)
        if isinstance(e, Bin):
            lc, lv = self._concretize(thread, e.left)
            rc, rv = self._concretize(thread, e.right)
            return Bin(e.op, lc, rc), _checked(e.op, lv, rv)
        raise InterpError(f"cannot evaluate {e!r} in source position")

    def _eval_guard(self, thread: str, g: Guard) -> bool:
        if isinstance(g, BoolLit):
            return g.value
        if isinstance(g, Not):
            return not self._eval_guard(thread, g.operand)
        _, lv = self._concretize(thread, g.left)
        _, rv = self._concretize(thread, g.right)
        if g.op == "==":
            return lv == rv
        if g.op == "<":
            return lv < rv
        if g.op == ">":
            return lv > rv
        raise InterpError(f"unknown comparison {g.op!r}")

    def eval_cexpr(self, e: CExpr) -> int:
        """Evaluate a concretized expression against current values."""
        if isinstance(e, Lit):
            return e.value
        if isinstance(e, Cell):
            return self.read_loc(e.loc())
        if isinstance(e, Bin):
            return _checked(e.op, self.eval_cexpr(e.left), self.eval_cexpr(e.right))
        raise InterpError(f"cannot evaluate {e!r}")

    # -- thread status -------------------------------------------------------------

    def _peek(self, thread: str) -> tuple[str, Command | None]:
        """Without side effects, find the thread's next state-changing
        command.  Returns ("state-change", cmd) or ("exhausted", None)."""
        cont = self.conts[thread]
        for _ in range(MAX_CONTROL_STEPS):
            if cont is None:
                return ("exhausted", None)
            cmd, rest = cont
            if isinstance(cmd, (Assign, Wait, Signal)):
                return ("state-change", cmd)
            if isinstance(cmd, Skip):
                cont = rest
            elif isinstance(cmd, Block):
                for inner in reversed(cmd.body):
                    rest = (inner, rest)
                cont = rest
            elif isinstance(cmd, While):
                if self._eval_guard(thread, cmd.guard):
                    cont = (cmd.body, (cmd, rest))
                else:
                    cont = rest
            elif isinstance(cmd, If):
                if self._eval_guard(thread, cmd.guard):
                    cont = (cmd.then, rest)
                elif cmd.orelse is not None:
                    cont = (cmd.orelse, rest)
                else:
                    cont = rest
            else:
                raise InterpError(f"unexpected command {cmd!r}")
        raise RuntimeFault(f"thread {thread!r} runs control flow without changing state")

    def thread_status(self, thread: str) -> str:
        kind, cmd = self._peek(thread)
        if kind == "exhausted":
            return FINISHED
        if isinstance(cmd, Wait) and self.read_loc((None, cmd.sem, None)) <= 0:
            return BLOCKED
        return RUNNABLE

    def next_command(self, thread: str) -> Command | None:
        """The thread's next state-changing command, if any."""
        return self._peek(thread)[1]

    def enabled_threads(self) -> tuple[str, ...]:
        return tuple(t for t in self.threads if self.thread_status(t) == RUNNABLE)

    def all_finished(self) -> bool:
        return all(self.thread_status(t) == FINISHED for t in self.threads)

    # -- stepping --------------------------------------------------------------------

    def step(self, choice: str) -> tuple[PathEntry, int, list[tuple]]:
        """Run ``choice`` up to and through its next state change.

        Returns (entry, displaced value, events).  Events are ("switch",
        seq, from, to) and ("block-entry", thread, block_id) tuples in
        occurrence order.  On a fault nothing is changed or logged.
        """
        if choice not in self.conts:
            raise ScheduleError(f"no thread named {choice!r}")
        if self.thread_status(choice) != RUNNABLE:
            raise ScheduleError(f"thread {choice!r} is not enabled")

        prev_cont = self.conts[choice]
        prev_last = self.last_thread
        be_len = len(self.log.block_entries)
        sw_len = len(self.log.switches)
        self._pre_step_control = (dict(self.conts), self.last_thread)
        seq = len(self.path.entries) + 1
        events: list[tuple] = []

        try:
            if choice != self.last_thread:
                self.log.switches.append((seq, self.last_thread, choice))
                events.append(("switch", seq, self.last_thread, choice))

            cont = self.conts[choice]
            entry: PathEntry | None = None
            old: int | None = None
            for _ in range(MAX_CONTROL_STEPS):
                if cont is None:
                    raise ScheduleError(f"thread {choice!r} has finished")
                cmd, rest = cont
                if not isinstance(cmd, Block) and cmd.cid in self.block_heads:
                    self.log.block_entries.append((choice, cmd.cid))
                    events.append(("block-entry", choice, cmd.cid))
                if isinstance(cmd, Assign):
                    rhs_c, value = self._concretize(choice, cmd.rhs)
                    if cmd.target.index is not None:
                        _, idx = self._concretize(choice, cmd.target.index)
                    else:
                        idx = None
                    owner = self.scope[choice][cmd.target.name]
                    loc: LocKey = (owner, cmd.target.name, idx)
                    old = self.read_loc(loc)
                    entry = PathEntry(seq, choice, cmd.cid, cmd.line, loc, rhs_c, PLAIN_ASSIGN)
                    self.write_loc(loc, value)
                    cont = rest
                    break
                if isinstance(cmd, (Wait, Signal)):
                    loc = (None, cmd.sem, None)
                    old = self.read_loc(loc)
                    if isinstance(cmd, Wait):
                        if old <= 0:
                            raise ScheduleError(f"wait({cmd.sem}) is blocked")
                        kind = WAIT_DECREMENT
                        rhs_c = Bin("-", Cell(None, cmd.sem, None), Lit(1))
                        value = old - 1
                    else:
                        kind = SIGNAL_INCREMENT
                        rhs_c = Bin("+", Cell(None, cmd.sem, None), Lit(1))
                        value = _checked("+", old, 1)
                    entry = PathEntry(seq, choice, cmd.cid, cmd.line, loc, rhs_c, kind)
                    self.write_loc(loc, value)
                    cont = rest
                    break
                if isinstance(cmd, Skip):
                    cont = rest
                elif isinstance(cmd, Block):
                    for inner in reversed(cmd.body):
                        rest = (inner, rest)
                    cont = rest
                elif isinstance(cmd, While):
                    if self._eval_guard(choice, cmd.guard):
                        cont = (cmd.body, (cmd, rest))
                    else:
                        cont = rest
                elif isinstance(cmd, If):
                    if self._eval_guard(choice, cmd.guard):
                        cont = (cmd.then, rest)
                    elif cmd.orelse is not None:
                        cont = (cmd.orelse, rest)
                    else:
                        cont = rest
                else:
                    raise InterpError(f"unexpected command {cmd!r}")
            else:
                raise RuntimeFault(f"thread {choice!r} runs control flow without changing state")
        except InterpError:
            del self.log.block_entries[be_len:]
            del self.log.switches[sw_len:]
            self.conts[choice] = prev_cont
            raise

        assert entry is not None and old is not None
        self.conts[choice] = cont
        self.path.entries.append(entry)
        self.log.length = len(self.path.entries)
        self.undo.append((choice, prev_cont, prev_last, be_len, sw_len))
        self.last_thread = choice
        return entry, old, events

    def raw_step(self, choice: str) -> None:
        """Re-execute one state change without recording anything.

        Used when re-running a stretch of the path from a checkpoint;
        the caller guarantees the choice sequence matches the original."""
        cont = self.conts[choice]
        for _ in range(MAX_CONTROL_STEPS):
            if cont is None:
                raise InterpError("raw_step ran past the thread's end")
            cmd, rest = cont
            if isinstance(cmd, Assign):
                _, value = self._concretize(choice, cmd.rhs)
                if cmd.target.index is not None:
                    _, idx = self._concretize(choice, cmd.target.index)
                else:
                    idx = None
                owner = self.scope[choice][cmd.target.name]
                self.write_loc((owner, cmd.target.name, idx), value)
                self.conts[choice] = rest
                return
            if isinstance(cmd, (Wait, Signal)):
                loc = (None, cmd.sem, None)
                old = self.read_loc(loc)
                if isinstance(cmd, Wait):
                    if old <= 0:
                        raise InterpError("raw_step replayed a blocked wait")
                    self.write_loc(loc, old - 1)
                else:
                    self.write_loc(loc, _checked("+", old, 1))
                self.conts[choice] = rest
                return
            if isinstance(cmd, Skip):
                cont = rest
            elif isinstance(cmd, Block):
                for inner in reversed(cmd.body):
                    rest = (inner, rest)
                cont = rest
            elif isinstance(cmd, While):
                if self._eval_guard(choice, cmd.guard):
                    cont = (cmd.body, (cmd, rest))
                else:
                    cont = rest
            elif isinstance(cmd, If):
                if self._eval_guard(choice, cmd.guard):
                    cont = (cmd.then, rest)
                elif cmd.orelse is not None:
                    cont = (cmd.orelse, rest)
                else:
                    cont = rest
            else:
                raise InterpError(f"unexpected command {cmd!r}")
        raise RuntimeFault(f"thread {choice!r} runs control flow without changing state")

    def pop_control(self) -> PathEntry:
        """Discard the most recent step's control effects: continuation,
        scheduler bookkeeping, logs, and the path entry.  The displaced
        data value must already have been restored by an engine."""
        if not self.undo:
            raise InterpError("nothing to unwind")
        thread, prev_cont, prev_last, be_len, sw_len = self.undo.pop()
        self.conts[thread] = prev_cont
        self.last_thread = prev_last
        del self.log.block_entries[be_len:]
        del self.log.switches[sw_len:]
        entry = self.path.entries.pop()
        self.log.length = len(self.path.entries)
        return entry

    # -- control snapshots (checkpointing support) ----------------------------------

    def boundary_control(self) -> tuple[dict[str, Cont], str | None]:
        """Control state captured just before the most recent step began."""
        return self._pre_step_control

    def current_control(self) -> tuple[dict[str, Cont], str | None]:
        return (dict(self.conts), self.last_thread)

    def restore_control(self, snap: tuple[dict[str, Cont], str | None]) -> None:
        self.conts = dict(snap[0])
        self.last_thread = snap[1]

    # -- snapshots ------------------------------------------------------------------

    def data_snapshot(self) -> dict[tuple[str | None, str], int | tuple[int, ...]]:
        return {
            k: tuple(v) if isinstance(v, list) else v for k, v in self.values.items()
        }

    def restore_data(self, snap: dict[tuple[str | None, str], int | tuple[int, ...]]) -> None:
        self.values = {
            k: list(v) if isinstance(v, tuple) else v for k, v in snap.items()
        }

    def snapshot(self) -> dict[str, Any]:
        """A structural summary: globals, per-thread locals and status."""
        globals_: dict[str, Any] = {}
        for d in self.program.globals:
            v = self.values[(None, d.name)]
            globals_[d.name] = list(v) if isinstance(v, list) else v
        threads: dict[str, Any] = {}
        for t in self.program.threads:
            locals_: dict[str, Any] = {}
            for d in t.locals:
                v = self.values[(t.name, d.name)]
                locals_[d.name] = list(v) if isinstance(v, list) else v
            cont = self.conts[t.name]
            threads[t.name] = {
                "locals": locals_,
                "at": cont[0].cid if cont is not None else None,
                "status": self.thread_status(t.name),
            }
        return {"globals": globals_, "threads": threads, "step": self.step_count}


def init_machine(program: Program, constants: dict[str, int] | None = None) -> Machine:
    return Machine(program, constants or {})


# ---------------------------------------------------------------------------
# Running and replaying
# ---------------------------------------------------------------------------

FINISHED_OUTCOME = "finished"
DEADLOCK_OUTCOME = "deadlock"
SCRIPT_EXHAUSTED_OUTCOME = "script-exhausted"


@dataclass(slots=True)
class RunResult:
    machine: Machine
    outcome: str


def run(
    program: Program,
    constants: dict[str, int] | None = None,
    schedule: Schedule | dict | None = None,
    observer=None,
    max_steps: int | None = None,
) -> RunResult:
    """Execute to completion (or deadlock, or script exhaustion).

    ``schedule`` may be a Schedule, a parsed schedule JSON object, or
    None for the default round-robin-free seeded schedule with seed 0.
    ``observer(machine, entry, old_value)`` is called after every step.
    """
    if isinstance(schedule, dict):
        schedule = schedule_from_json(schedule)
    if schedule is None:
        schedule = SeededSchedule(0)

    m = init_machine(program, constants)
    rng = random.Random(schedule.seed) if isinstance(schedule, SeededSchedule) else None
    script = iter(schedule.choices) if isinstance(schedule, ScriptedSchedule) else None

    while True:
        if max_steps is not None and m.step_count >= max_steps:
            return RunResult(m, SCRIPT_EXHAUSTED_OUTCOME)
        enabled = m.enabled_threads()
        if not enabled:
            outcome = FINISHED_OUTCOME if m.all_finished() else DEADLOCK_OUTCOME
            return RunResult(m, outcome)
        if script is not None:
            choice = next(script, None)
            if choice is None:
                return RunResult(m, SCRIPT_EXHAUSTED_OUTCOME)
            if choice not in enabled:
                raise ScheduleError(
                    f"scripted choice {choice!r} at step {m.step_count + 1} is not enabled"
                )
        elif rng is not None:
            choice = rng.choice(enabled)
        else:
            raise ScheduleError("run() needs a scripted or seeded schedule")
        entry, old, _ = m.step(choice)
        if observer is not None:
            observer(m, entry, old)
    # unreachable


def replay(
    program: Program,
    constants: dict[str, int] | None,
    log: ExecutionLog,
    upto: int | None = None,
    observer=None,
) -> Machine:
    """Rebuild an execution from its switch list.

    Steps the thread named by the most recent switch until the next
    switch's seq, for ``upto`` steps (default: the log's full length).
    Regenerated switches and block entries are checked against the
    given log; any difference raises :class:`ReplayDivergence`."""
    m = init_machine(program, constants)
    target = log.length if upto is None else min(upto, log.length)
    sw = log.switches
    sw_i = 0
    current: str | None = None
    while m.step_count < target:
        seq = m.step_count + 1
        if sw_i < len(sw) and sw[sw_i][0] == seq:
            current = sw[sw_i][2]
            sw_i += 1
        if current is None:
            raise ReplayDivergence("log names no thread for the first step")
        be_before = len(m.log.block_entries)
        sw_before = len(m.log.switches)
        try:
            entry, old, _ = m.step(current)
        except InterpError as e:
            raise ReplayDivergence(f"step {seq} failed during replay: {e}") from e
        if observer is not None:
            observer(m, entry, old)
        for j in range(sw_before, len(m.log.switches)):
            if j >= len(log.switches) or m.log.switches[j] != log.switches[j]:
                raise ReplayDivergence(f"switch record {j} diverged at step {seq}")
        for j in range(be_before, len(m.log.block_entries)):
            if j >= len(log.block_entries) or m.log.block_entries[j] != log.block_entries[j]:
                raise ReplayDivergence(f"block entry {j} diverged at step {seq}")
    if upto is None or upto >= log.length:
        if len(m.log.switches) != len(log.switches):
            raise ReplayDivergence("replay produced fewer switches than recorded")
        if len(m.log.block_entries) != len(log.block_entries):
            raise ReplayDivergence("replay produced fewer block entries than recorded")
    return m
