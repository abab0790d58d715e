"""Five interchangeable backtracking engines.

Each engine watches a machine's forward steps and can undo the most
recent one.  They differ only in what they keep around, measured in
integers of saved data (``saved_ints``):

* ``basic-ss``: a full copy of every data value, every step
* ``incremental-ss``: the one displaced value, every step
* ``checkpointing``: displaced values deduplicated per checkpoint
  interval, restored by re-running forward from the interval's start
* ``static-rcg``: nothing for commands whose inverse is known at
  compile time, one value for the rest
* ``dynamic-rcg``: nothing when reverse code can be generated from the
  recorded path, one value when it cannot

Restoring is split in two: ``engine.restore`` puts back the data value,
then every attached engine gets ``release`` so its books stay aligned,
and finally the machine unwinds control (``pop_control``).  The session
layer drives that order.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import Any

from .interp import Cont, Machine, PathEntry
from .lang import Bin, LocKey, Program, Wait, Block, If, While
from .revgen import (
    DEFAULT_BUDGET,
    NeedsStateSaving,
    ReverseCode,
    STATE_SAVE,
    classify_static,
    execute_reverse,
    gen_reverse,
    static_forms,
)

ENGINE_NAMES = (
    "basic-ss",
    "incremental-ss",
    "checkpointing",
    "static-rcg",
    "dynamic-rcg",
)


class EngineError(Exception):
    pass


@dataclass(frozen=True, slots=True)
class MemoryLedger:
    engine: str
    saved_ints: int
    aux_log_ints: int
    retained_revcode_cmds: int

    def to_json(self) -> dict[str, Any]:
        return {
            "engine": self.engine,
            "saved_ints": self.saved_ints,
            "aux_log_ints": self.aux_log_ints,
            "retained_revcode_cmds": self.retained_revcode_cmds,
        }


class Engine:
    name: str = "?"

    def observe(self, machine: Machine, entry: PathEntry, old: int) -> None:
        raise NotImplementedError

    def restore(self, machine: Machine, entry: PathEntry) -> None:
        """Put the data state back to just before ``entry`` ran.

        ``entry`` must be the machine's most recent step.  Control and
        logs are untouched; the caller unwinds those afterwards."""
        raise NotImplementedError

    def release(self, entry: PathEntry) -> None:
        """Drop whatever was kept for ``entry`` (after a restore)."""
        raise NotImplementedError

    @property
    def saved_ints(self) -> int:
        raise NotImplementedError

    @property
    def retained_revcode_cmds(self) -> int:
        return 0

    def ledger(self, machine: Machine) -> MemoryLedger:
        return MemoryLedger(
            self.name,
            self.saved_ints,
            machine.log.aux_log_ints,
            self.retained_revcode_cmds,
        )


class BasicSaveEngine(Engine):
    """Whole-state copies.  The pre-step copy is reconstructed from the
    post-step state plus the displaced value, so observation stays a
    pure after-the-fact affair like everyone else's."""

    name = "basic-ss"

    def __init__(self, machine: Machine):
        self._state_ints = machine.state_ints
        self._snapshots: list[dict] = []

    def observe(self, machine: Machine, entry: PathEntry, old: int) -> None:
        snap = dict(machine.data_snapshot())
        owner, name, index = entry.lhs
        if index is None:
            snap[(owner, name)] = old
        else:
            arr = list(snap[(owner, name)])
            arr[index] = old
            snap[(owner, name)] = tuple(arr)
        self._snapshots.append(snap)

    def restore(self, machine: Machine, entry: PathEntry) -> None:
        if len(self._snapshots) != entry.seq:
            raise EngineError("basic-ss is out of step with the machine")
        machine.restore_data(self._snapshots[-1])

    def release(self, entry: PathEntry) -> None:
        self._snapshots.pop()

    @property
    def saved_ints(self) -> int:
        return len(self._snapshots) * self._state_ints


class IncrementalSaveEngine(Engine):
    """One (location, displaced value) pair per step; the value is the
    charged int, the location rides along as bookkeeping."""

    name = "incremental-ss"

    def __init__(self, machine: Machine):
        self._saves: list[tuple[int, LocKey, int]] = []

    def observe(self, machine: Machine, entry: PathEntry, old: int) -> None:
        self._saves.append((entry.seq, entry.lhs, old))

    def restore(self, machine: Machine, entry: PathEntry) -> None:
        seq, loc, old = self._saves[-1]
        if seq != entry.seq or loc != entry.lhs:
            raise EngineError("incremental-ss is out of step with the machine")
        machine.write_loc(loc, old)

    def release(self, entry: PathEntry) -> None:
        self._saves.pop()

    @property
    def saved_ints(self) -> int:
        return len(self._saves)


@dataclass(slots=True)
class _Interval:
    start_seq: int
    control: tuple[dict[str, Cont], str | None]
    # loc -> (value at interval start, seq of the interval's first write)
    saved: dict[LocKey, tuple[int, int]] = field(default_factory=dict)


def default_checkpoints(program: Program) -> frozenset[int]:
    """Every wait site: the natural resynchronization points."""
    cids: set[int] = set()

    def walk(b: Block) -> None:
        for cmd in b.body:
            if isinstance(cmd, Wait):
                cids.add(cmd.cid)
            elif isinstance(cmd, While):
                walk(cmd.body)
            elif isinstance(cmd, If):
                walk(cmd.then)
                if cmd.orelse is not None:
                    walk(cmd.orelse)

    for t in program.threads:
        walk(t.body)
    return frozenset(cids)


class CheckpointEngine(Engine):
    """Per-interval first-write saving.

    Reaching a checkpoint command closes the running interval and opens
    a new one; the checkpoint command's own write is the new interval's
    first record.  Within an interval each location is saved once, at
    its first write.  Undoing a step applies the whole interval's saved
    values (landing exactly on the interval's start state), rewinds
    control to the same point, and re-executes forward to just before
    the undone step."""

    name = "checkpointing"

    def __init__(self, machine: Machine, checkpoints: frozenset[int] | None = None):
        self.checkpoints = (
            checkpoints if checkpoints is not None else default_checkpoints(machine.program)
        )
        self._intervals: list[_Interval] = []
        self._steps_observed = 0

    def set_checkpoints(self, checkpoints: frozenset[int]) -> None:
        if self._steps_observed:
            raise EngineError("checkpoints are fixed once stepping has begun")
        self.checkpoints = frozenset(checkpoints)

    def observe(self, machine: Machine, entry: PathEntry, old: int) -> None:
        self._steps_observed += 1
        if not self._intervals or entry.command_id in self.checkpoints:
            self._intervals.append(_Interval(entry.seq, machine.boundary_control()))
        cur = self._intervals[-1]
        if entry.lhs not in cur.saved:
            cur.saved[entry.lhs] = (old, entry.seq)

    def restore(self, machine: Machine, entry: PathEntry) -> None:
        n = entry.seq
        cur = self._intervals[-1]
        if not cur.start_seq <= n:
            raise EngineError("checkpointing is out of step with the machine")
        for loc, (old, _) in cur.saved.items():
            machine.write_loc(loc, old)
        machine.restore_control(cur.control)
        for e in machine.path.entries[cur.start_seq - 1 : n - 1]:
            machine.raw_step(e.thread)

    def release(self, entry: PathEntry) -> None:
        n = entry.seq
        cur = self._intervals[-1]
        cur.saved = {loc: v for loc, v in cur.saved.items() if v[1] != n}
        if cur.start_seq == n:
            if cur.saved:
                raise EngineError("interval still holds saves at its own start")
            self._intervals.pop()

    @property
    def saved_ints(self) -> int:
        return sum(len(iv.saved) for iv in self._intervals)


class StaticRcgEngine(Engine):
    """Compile-time classification: self-undoing commands save nothing,
    everything else saves its displaced value."""

    name = "static-rcg"

    def __init__(self, machine: Machine):
        self._labels = classify_static(machine.program)
        self._forms = static_forms(machine.program)
        self._saves: list[tuple[int, LocKey, int]] = []

    def observe(self, machine: Machine, entry: PathEntry, old: int) -> None:
        if self._labels[entry.command_id] == STATE_SAVE:
            self._saves.append((entry.seq, entry.lhs, old))

    def restore(self, machine: Machine, entry: PathEntry) -> None:
        if self._labels[entry.command_id] == STATE_SAVE:
            seq, loc, old = self._saves[-1]
            if seq != entry.seq or loc != entry.lhs:
                raise EngineError("static-rcg is out of step with the machine")
            machine.write_loc(loc, old)
            return
        form = self._forms[entry.command_id]
        cur = machine.read_loc(entry.lhs)
        rhs = entry.rhs
        if form.shape in ("wait", "signal"):
            e_val = 1
        else:
            assert isinstance(rhs, Bin)
            other = rhs.left if form.e_on_left else rhs.right
            e_val = machine.eval_cexpr(other)
        machine.write_loc(entry.lhs, form.invert(cur, e_val))

    def release(self, entry: PathEntry) -> None:
        if self._labels[entry.command_id] == STATE_SAVE:
            self._saves.pop()

    @property
    def saved_ints(self) -> int:
        return len(self._saves)


class DynamicRcgEngine(Engine):
    """Path-driven reverse code, generated eagerly at each step.

    Whether a step needs saving is decided right away (and never
    depends on the retention window); the generated code itself is kept
    only for the last ``retention`` steps and is regenerated on demand,
    which is safe because generation is deterministic in the path."""

    name = "dynamic-rcg"

    def __init__(self, machine: Machine, retention: int = 16, budget: int = DEFAULT_BUDGET):
        if retention < 1:
            raise EngineError("retention must be at least 1")
        self.retention = retention
        self.budget = budget
        self._saves: list[tuple[int, LocKey, int]] = []
        self._save_seqs: set[int] = set()
        self._codes: dict[int, ReverseCode] = {}
        self.generated = 0
        self.regenerated = 0

    def observe(self, machine: Machine, entry: PathEntry, old: int) -> None:
        result = gen_reverse(machine.path, entry.seq, self.budget)
        self.generated += 1
        if isinstance(result, NeedsStateSaving):
            self._saves.append((entry.seq, entry.lhs, old))
            self._save_seqs.add(entry.seq)
            return
        self._codes[entry.seq] = result
        horizon = entry.seq - self.retention
        if horizon > 0:
            for s in [s for s in self._codes if s <= horizon]:
                del self._codes[s]

    def restore(self, machine: Machine, entry: PathEntry) -> None:
        n = entry.seq
        if n in self._save_seqs:
            seq, loc, old = self._saves[-1]
            if seq != n or loc != entry.lhs:
                raise EngineError("dynamic-rcg is out of step with the machine")
            machine.write_loc(loc, old)
            return
        code = self._codes.get(n)
        if code is None:
            result = gen_reverse(machine.path, n, self.budget)
            if isinstance(result, NeedsStateSaving):
                raise EngineError(
                    f"step {n} regenerated as needs-state-saving but was not saved"
                )
            code = result
            self.regenerated += 1
        execute_reverse(machine, code)

    def release(self, entry: PathEntry) -> None:
        n = entry.seq
        if n in self._save_seqs:
            self._saves.pop()
            self._save_seqs.discard(n)
        else:
            self._codes.pop(n, None)

    @property
    def saved_ints(self) -> int:
        return len(self._saves)

    @property
    def retained_revcode_cmds(self) -> int:
        return sum(len(c.steps) for c in self._codes.values())

    def reverse_code_for(self, machine: Machine, seq: int):
        """The reverse code for a recorded step, from cache or regenerated."""
        if seq in self._save_seqs:
            return NeedsStateSaving("saved at generation time")
        code = self._codes.get(seq)
        if code is not None:
            return code
        return gen_reverse(machine.path, seq, self.budget)


def make_engine(
    name: str,
    machine: Machine,
    *,
    checkpoints: frozenset[int] | None = None,
    retention: int = 16,
    budget: int = DEFAULT_BUDGET,
) -> Engine:
    if machine.step_count:
        raise EngineError("engines must attach before the first step")
    if name == "basic-ss":
        return BasicSaveEngine(machine)
    if name == "incremental-ss":
        return IncrementalSaveEngine(machine)
    if name == "checkpointing":
        return CheckpointEngine(machine, checkpoints)
    if name == "static-rcg":
        return StaticRcgEngine(machine)
    if name == "dynamic-rcg":
        return DynamicRcgEngine(machine, retention=retention, budget=budget)
    raise EngineError(f"unknown engine {name!r}: pick from {', '.join(ENGINE_NAMES)}")


def set_checkpoints(engine: Engine, checkpoints: frozenset[int]) -> None:
    if not isinstance(engine, CheckpointEngine):
        raise EngineError("only the checkpointing engine takes checkpoints")
    engine.set_checkpoints(checkpoints)


class EngineGroup:
    """Several engines observing one machine, one of them active.

    Forward steps are timed per engine so benchmarks can report the
    observation overhead of each strategy side by side."""

    def __init__(self, machine: Machine, engines: list[Engine], active: str | None = None):
        if not engines:
            raise EngineError("need at least one engine")
        self.machine = machine
        self.engines = engines
        names = [e.name for e in engines]
        if len(set(names)) != len(names):
            raise EngineError("duplicate engines in one group")
        self.active_name = active or names[0]
        if self.active_name not in names:
            raise EngineError(f"active engine {self.active_name!r} is not attached")
        self.observe_seconds: dict[str, float] = {n: 0.0 for n in names}

    @property
    def active(self) -> Engine:
        for e in self.engines:
            if e.name == self.active_name:
                return e
        raise EngineError("active engine vanished")

    def after_step(self, entry: PathEntry, old: int) -> None:
        for e in self.engines:
            t0 = time.perf_counter()
            e.observe(self.machine, entry, old)
            self.observe_seconds[e.name] += time.perf_counter() - t0

    def step(self, choice: str):
        entry, old, events = self.machine.step(choice)
        self.after_step(entry, old)
        return entry, old, events

    def back(self) -> PathEntry:
        if not self.machine.path.entries:
            raise EngineError("already at the origin")
        entry = self.machine.path.entries[-1]
        self.active.restore(self.machine, entry)
        for e in self.engines:
            e.release(entry)
        return self.machine.pop_control()

    def ledgers(self) -> list[MemoryLedger]:
        return [e.ledger(self.machine) for e in self.engines]
