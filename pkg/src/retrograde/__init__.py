"""Reverse execution of concurrent programs.

A deterministic interpreter for a small threaded language records an
execution path; five interchangeable engines (whole-state saving,
incremental saving, checkpoint intervals, compile-time reverse code,
and path-derived reverse code) undo steps at very different memory
costs.  A line-based JSON protocol exposes forward/backward debugging
to external clients.
"""

from .lang import LangError, ParseError, Program, parse_program, pretty_print
from .interp import (
    ExecutionLog,
    ExecutionPath,
    InterpError,
    Machine,
    PathEntry,
    ReplayDivergence,
    RuntimeFault,
    ScheduleError,
    ScriptedSchedule,
    SeededSchedule,
    init_machine,
    replay,
    run,
    schedule_from_json,
)
from .revgen import (
    INIT_DEF,
    NO_HISTORY,
    NeedsStateSaving,
    ReverseCode,
    classify_static,
    execute_reverse,
    gen_reverse,
    reaching_definition,
)
from .engines import (
    ENGINE_NAMES,
    Engine,
    EngineGroup,
    MemoryLedger,
    default_checkpoints,
    make_engine,
    set_checkpoints,
)
from .bench import (
    BenchConfig,
    bounded_buffer_fixture,
    closed_form,
    run_benchmark,
    schedule_s_opt,
    schedule_s_seq,
)
from .debug import Session, execute_command, serve

__version__ = "0.1.0"

__all__ = [
    "BenchConfig",
    "ENGINE_NAMES",
    "Engine",
    "EngineGroup",
    "ExecutionLog",
    "ExecutionPath",
    "INIT_DEF",
    "InterpError",
    "LangError",
    "Machine",
    "MemoryLedger",
    "NO_HISTORY",
    "NeedsStateSaving",
    "ParseError",
    "PathEntry",
    "Program",
    "ReplayDivergence",
    "ReverseCode",
    "RuntimeFault",
    "ScheduleError",
    "ScriptedSchedule",
    "SeededSchedule",
    "Session",
    "bounded_buffer_fixture",
    "classify_static",
    "closed_form",
    "default_checkpoints",
    "execute_command",
    "execute_reverse",
    "gen_reverse",
    "init_machine",
    "make_engine",
    "parse_program",
    "pretty_print",
    "reaching_definition",
    "replay",
    "run",
    "run_benchmark",
    "schedule_from_json",
    "schedule_s_opt",
    "schedule_s_seq",
    "serve",
    "set_checkpoints",
    "__version__",
]
