"""Canned fixtures, canonical schedules, closed-form memory costs, and
the benchmark runner that checks measured costs against them."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

from .engines import ENGINE_NAMES, EngineGroup, make_engine
from .interp import (
    FINISHED_OUTCOME,
    Machine,
    Schedule,
    ScriptedSchedule,
    SeededSchedule,
    init_machine,
    schedule_from_json,
)
from .lang import Program, parse_program

PRODUCER = "Producer"
CONSUMER = "Consumer"


@dataclass(frozen=True, slots=True)
class Fixture:
    name: str
    text: str
    program: Program
    constants: dict[str, int]


def bounded_buffer_fixture(M: int, N: int, src: list[int] | None = None) -> Fixture:
    """A producer/consumer pair over an M-slot ring buffer moving N items.

    The producer copies src into the buffer and mixes the shared g with
    its private d; the consumer drains the buffer into dst (adding one
    along the way) and mixes g with its private e.  Default src values
    are 10, 20, 30, ...
    """
    if M < 1 or N < 1:
        raise ValueError("M and N must be at least 1")
    if src is None:
        src = [10 * (i + 1) for i in range(N)]
    if len(src) != N:
        raise ValueError(f"src has {len(src)} values, N is {N}")
    src_text = ", ".join(str(v) for v in src)
    text = f"""\
// ring buffer of M slots shared by a producer and a consumer
// the producer moves src into buf, the consumer drains buf into dst

int buf[M]
int g := 0
int empty := M
int full := 0

thread {PRODUCER} {{
  int src[N] := {{{src_text}}}
  int p := 0
  int rear := 0
  int d := 0
  while (p < N) {{
    wait(empty)
    buf[rear] := src[p]
    p := p + 1
    rear := rear + 1
    rear := rear % M
    signal(full)
    g := d + 1
    d := g * 3
  }}
}}
thread {CONSUMER} {{
  int dst[N]
  int c := 0
  int front := 0
  int e := 0
  while (c < N) {{
    wait(full)
    dst[c] := buf[front] + 1
    c := c + 1
    front := front + 1
    front := front % M
    signal(empty)
    e := g * 2
    g := e - 1
  }}
}}
"""
    program = parse_program(text, constant_names=("M", "N"))
    return Fixture("bounded-buffer", text, program, {"M": M, "N": N})


def schedule_s_seq(N: int) -> ScriptedSchedule:
    """Per item: the producer's eight state changes, then the consumer's."""
    return ScriptedSchedule(tuple(([PRODUCER] * 8 + [CONSUMER] * 8) * N))


def schedule_s_opt(N: int) -> ScriptedSchedule:
    """Per item: producer through its signal, consumer through its g
    update, then the stragglers.  Valid for every buffer size."""
    round_ = [PRODUCER] * 6 + [CONSUMER] * 7 + [PRODUCER] * 2 + [CONSUMER]
    return ScriptedSchedule(tuple(round_ * N))


SCHEDULE_BUILDERS = {"s-seq": schedule_s_seq, "s-opt": schedule_s_opt}


@dataclass(frozen=True, slots=True)
class ClosedForm:
    value: int
    requires_schedule: str  # "any" | "s-opt"


def closed_form(engine: str, M: int, N: int) -> ClosedForm:
    """Expected saved_ints for the bounded buffer, per engine.

    Sixteen state changes move one item end to end.  The whole-state
    engine copies the 9 scalars plus M+2N array slots each time; the
    incremental engine saves one value per step; checkpointing at the
    two wait sites dedups each item's sixteen writes down to thirteen
    distinct locations (but only under the s-opt interleaving);
    compile-time reverse code saves at the eight non-self-inverting
    sites; path-derived reverse code only ever saves the two truncated
    ring positions per item (again under s-opt)."""
    if engine == "basic-ss":
        return ClosedForm(16 * N * (9 + M + 2 * N), "any")
    if engine == "incremental-ss":
        return ClosedForm(16 * N, "any")
    if engine == "checkpointing":
        return ClosedForm(13 * N, "s-opt")
    if engine == "static-rcg":
        return ClosedForm(8 * N, "any")
    if engine == "dynamic-rcg":
        return ClosedForm(2 * N, "s-opt")
    raise ValueError(f"unknown engine {engine!r}")


# ---------------------------------------------------------------------------
# Runner
# ---------------------------------------------------------------------------


@dataclass(slots=True)
class BenchConfig:
    fixture: str = "bounded-buffer"
    M: int = 3
    N: int = 5
    schedule: str = "s-opt"  # "s-opt" | "s-seq" | raw schedule JSON string
    engines: tuple[str, ...] = ENGINE_NAMES
    src: list[int] | None = None
    retention: int = 16
    budget: int = 64


@dataclass(slots=True)
class BenchRow:
    engine: str
    saved_ints: int
    closed_form: int | None
    match: bool | None
    aux_log_ints: int
    wall_ms: float


@dataclass(slots=True)
class BenchReport:
    config: BenchConfig
    outcome: str
    functional_ok: bool
    rows: list[BenchRow] = field(default_factory=list)

    def to_json(self) -> dict[str, Any]:
        return {
            "fixture": self.config.fixture,
            "M": self.config.M,
            "N": self.config.N,
            "schedule": self.config.schedule,
            "outcome": self.outcome,
            "functional_ok": self.functional_ok,
            "rows": [
                {
                    "engine": r.engine,
                    "saved_ints": r.saved_ints,
                    "closed_form": r.closed_form,
                    "match": r.match,
                    "aux_log_ints": r.aux_log_ints,
                    "wall_ms": r.wall_ms,
                }
                for r in self.rows
            ],
        }

    def to_csv(self) -> str:
        lines = ["engine,saved_ints,closed_form,match,aux_log_ints,wall_ms"]
        for r in self.rows:
            cf = "" if r.closed_form is None else str(r.closed_form)
            match = "" if r.match is None else ("yes" if r.match else "no")
            lines.append(
                f"{r.engine},{r.saved_ints},{cf},{match},{r.aux_log_ints},{r.wall_ms:.3f}"
            )
        return "\n".join(lines) + "\n"


def _drive(machine: Machine, schedule: Schedule, group: EngineGroup) -> str:
    import random

    rng = random.Random(schedule.seed) if isinstance(schedule, SeededSchedule) else None
    script = iter(schedule.choices) if isinstance(schedule, ScriptedSchedule) else None
    while True:
        enabled = machine.enabled_threads()
        if not enabled:
            return FINISHED_OUTCOME if machine.all_finished() else "deadlock"
        if script is not None:
            choice = next(script, None)
            if choice is None:
                return "script-exhausted"
        else:
            choice = rng.choice(enabled)
        entry, old, _ = machine.step(choice)
        group.after_step(entry, old)


def run_benchmark(config: BenchConfig) -> BenchReport:
    if config.fixture != "bounded-buffer":
        raise ValueError(f"unknown fixture {config.fixture!r}")
    fixture = bounded_buffer_fixture(config.M, config.N, config.src)

    if config.schedule in SCHEDULE_BUILDERS:
        schedule: Schedule = SCHEDULE_BUILDERS[config.schedule](config.N)
        schedule_label = config.schedule
    else:
        schedule = schedule_from_json(json.loads(config.schedule))
        schedule_label = "custom"

    machine = init_machine(fixture.program, fixture.constants)
    engines = [
        make_engine(name, machine, retention=config.retention, budget=config.budget)
        for name in config.engines
    ]
    group = EngineGroup(machine, engines)
    outcome = _drive(machine, schedule, group)

    src = machine.values[(PRODUCER, "src")]
    dst = machine.values[(CONSUMER, "dst")]
    functional_ok = outcome == FINISHED_OUTCOME and list(dst) == [v + 1 for v in src]

    report = BenchReport(config, outcome, functional_ok)
    for e in engines:
        cf: int | None = None
        match: bool | None = None
        form = closed_form(e.name, config.M, config.N)
        if form.requires_schedule == "any" or form.requires_schedule == schedule_label:
            cf = form.value
            match = e.saved_ints == cf
        report.rows.append(
            BenchRow(
                engine=e.name,
                saved_ints=e.saved_ints,
                closed_form=cf,
                match=match,
                aux_log_ints=machine.log.aux_log_ints,
                wall_ms=group.observe_seconds[e.name] * 1000.0,
            )
        )
    return report


def write_report_files(report: BenchReport, csv_path: str | Path) -> tuple[Path, Path]:
    """Write the CSV and its JSON twin next to each other."""
    csv_file = Path(csv_path)
    json_file = csv_file.with_suffix(".json")
    csv_file.write_text(report.to_csv())
    json_file.write_text(json.dumps(report.to_json(), indent=2) + "\n")
    return csv_file, json_file
