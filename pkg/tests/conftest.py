"""Shared oracles and run recorders.

Expected values in the test suite come from these helpers, which lean
only on forward execution and first principles: data snapshots taken
after every step, a brute-force reaching-definition scan, and an
independent simulation of per-interval first-write saving.
"""

from __future__ import annotations

import random
from pathlib import Path

import pytest

from retrograde.bench import bounded_buffer_fixture
from retrograde.interp import ScriptedSchedule, init_machine
from retrograde.lang import Assign, Block, If, Program, Signal, Wait, While, parse_program

FIXTURES = Path(__file__).parent / "fixtures"

PRODUCER = "Producer"
CONSUMER = "Consumer"


def load_fixture(name: str, constants: dict[str, int] | None = None):
    text = (FIXTURES / f"{name}.mcl").read_text()
    return parse_program(text, tuple(constants or {})), dict(constants or {})


def bb(M: int, N: int, src=None):
    fx = bounded_buffer_fixture(M, N, src)
    return fx.program, fx.constants


def loc_value(snap: dict, loc) -> int:
    owner, name, index = loc
    v = snap[(owner, name)]
    return v[index] if index is not None else v


def run_with_snapshots(program: Program, constants, choices):
    """Drive a scripted run; returns (machine, snaps, olds) where
    snaps[k] is the data state after k steps and olds[k] the value
    displaced by step k+1."""
    m = init_machine(program, constants)
    snaps = [m.data_snapshot()]
    olds = []
    for choice in choices:
        _, old, _ = m.step(choice)
        snaps.append(m.data_snapshot())
        olds.append(old)
    return m, snaps, olds


def random_complete_schedule(program: Program, constants, seed: int, max_steps: int = 10_000):
    """Random scheduling to completion, returned as a replayable script."""
    m = init_machine(program, constants)
    rng = random.Random(seed)
    choices = []
    while m.step_count < max_steps:
        enabled = m.enabled_threads()
        if not enabled:
            break
        choice = rng.choice(enabled)
        m.step(choice)
        choices.append(choice)
    return ScriptedSchedule(tuple(choices))


def state_change_commands(program: Program):
    """All Assign/Wait/Signal commands, flattened."""
    out = []

    def walk(b: Block):
        for cmd in b.body:
            if isinstance(cmd, (Assign, Wait, Signal)):
                out.append(cmd)
            elif isinstance(cmd, While):
                walk(cmd.body)
            elif isinstance(cmd, If):
                walk(cmd.then)
                if cmd.orelse is not None:
                    walk(cmd.orelse)

    for t in program.threads:
        walk(t.body)
    return out


def command_at_line(program: Program, line: int):
    matches = [c for c in state_change_commands(program) if c.line == line]
    assert len(matches) == 1, f"line {line} has {len(matches)} state-changing commands"
    return matches[0]


def brute_force_reaching(entries, loc, before: int):
    """Last seq < before writing loc, or None."""
    best = None
    for e in entries:
        if e.seq < before and e.lhs == loc:
            if best is None or e.seq > best:
                best = e.seq
    return best


def brute_force_checkpoint_ints(entries, olds, checkpoint_cids) -> int:
    """Independent count of per-interval first-write saves."""
    intervals: list[dict] = []
    for e, old in zip(entries, olds):
        if not intervals or e.command_id in checkpoint_cids:
            intervals.append({})
        if e.lhs not in intervals[-1]:
            intervals[-1][e.lhs] = old
    return sum(len(iv) for iv in intervals)


@pytest.fixture
def bb35():
    return bb(3, 5)
