"""Reverse-code generation over a recorded execution path.

Backtracking the last state change of a path means recovering the
overwritten value.  Saving it beforehand always works; this module
instead tries to *compute* it from values still live in the current
state, the concretized right-hand sides recorded on the path, and the
program's initial values.

The central routine answers: as an expression over the **current**
state (the state right after path entry ``n``, with nothing later
applied), what was the value of location ``loc`` just before entry
``t`` executed?  Three techniques are tried in order:

current read
    If nothing in entries ``t..n`` writes ``loc``, its current value is
    already the wanted one; emit a plain read.

redefine
    Find the entry ``r`` that last wrote ``loc`` before ``t`` (its
    reaching definition).  The wanted value is what ``r``'s right-hand
    side evaluated to, so rebuild that expression, recursively
    restoring each of its operands to their values before ``r``.  When
    no writer exists and the path is complete from the start, the
    declaration's initial value is the answer.

extract from use
    If ``loc`` was read after its reaching definition by some entry
    ``u`` whose right-hand side uses it exactly once under an
    invertible top-level operator, solve for it: from
    ``y := loc + E`` recover ``loc = y' - E'``, where ``y'`` is ``y``
    restored to just after ``u`` and ``E'`` is the other operand
    restored to just before ``u``.  Multiplication is inverted only by
    a nonzero literal, via a division that must divide exactly.

Recursion is bounded two ways: a location already being restored
further up the chain must not be restored again deeper down (value
cycles are cut rather than unrolled), and a fixed budget caps the total
number of expansions.  Both cause a clean fall back to state saving.

The result is a single fused assignment (or none, for a provably
value-preserving write): applying it restores the target location and
touches nothing else.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Union

from .lang import (
    EXACT_DIV,
    Assign,
    Bin,
    Block,
    Cell,
    Command,
    If,
    Lit,
    LocKey,
    Program,
    Signal,
    Var,
    Wait,
    While,
)
from .interp import (
    CExpr,
    ExecutionPath,
    Machine,
    PathEntry,
)


class _Sentinel:
    __slots__ = ("label",)

    def __init__(self, label: str):
        self.label = label

    def __repr__(self) -> str:
        return self.label


#: Reaching definition is the declaration's initializer.
INIT_DEF = _Sentinel("INIT_DEF")
#: The path is a window; whatever defined the location lies before it.
NO_HISTORY = _Sentinel("NO_HISTORY")

Reaching = Union[int, _Sentinel]

DEFAULT_BUDGET = 64


def reaching_definition(path: ExecutionPath, loc: LocKey, before: int) -> Reaching:
    """Seq of the last entry writing ``loc`` strictly before ``before``,
    or INIT_DEF / NO_HISTORY when no recorded entry does."""
    for r in range(min(before, len(path.entries) + 1) - 1, 0, -1):
        if path.entries[r - 1].lhs == loc:
            return r
    return INIT_DEF if path.complete_from_start else NO_HISTORY


# ---------------------------------------------------------------------------
# Generation result types
# ---------------------------------------------------------------------------


@dataclass(frozen=True, slots=True)
class Prov:
    """How a sub-value was obtained; children follow operand order."""

    technique: str  # "current" | "redefine" | "init-def" | "extract-from-use"
    seq: int | None
    loc: LocKey
    children: tuple["Prov", ...] = ()

    def to_json(self) -> dict:
        return {
            "technique": self.technique,
            "seq": self.seq,
            "loc": _loc_str(self.loc),
            "children": [c.to_json() for c in self.children],
        }


@dataclass(frozen=True, slots=True)
class ReverseStep:
    lhs: LocKey
    rhs: CExpr


@dataclass(frozen=True, slots=True)
class ReverseCode:
    """Reverse code for one path entry: zero steps when the forward
    write provably kept the old value, otherwise one fused assignment."""

    target: LocKey
    steps: tuple[ReverseStep, ...]
    provenance: Prov

    def render(self) -> str:
        from .lang import render_expr

        if not self.steps:
            return f"// {_loc_str(self.target)} unchanged, nothing to undo"
        lines = []
        for s in self.steps:
            lines.append(f"{_loc_str(s.lhs)} := {render_expr(s.rhs)}")
        return "\n".join(lines)


@dataclass(frozen=True, slots=True)
class NeedsStateSaving:
    reason: str


GenResult = Union[ReverseCode, NeedsStateSaving]


def _loc_str(loc: LocKey) -> str:
    owner, name, index = loc
    return f"{name}[{index}]" if index is not None else name


# ---------------------------------------------------------------------------
# Generator
# ---------------------------------------------------------------------------


def _cell_count(e: CExpr, loc: LocKey) -> int:
    if isinstance(e, Cell):
        return 1 if e.loc() == loc else 0
    if isinstance(e, Bin):
        return _cell_count(e.left, loc) + _cell_count(e.right, loc)
    return 0


class _Generator:
    def __init__(self, path: ExecutionPath, n: int, budget: int):
        self.path = path
        self.n = n
        self.budget = budget
        self.stack: list[LocKey] = []
        self.exhausted = False

    # Entries are 1-based; all scans stay within 1..n.

    def _entry(self, seq: int) -> PathEntry:
        return self.path.entries[seq - 1]

    def _written_in(self, loc: LocKey, lo: int, hi: int) -> bool:
        for s in range(max(lo, 1), min(hi, self.n) + 1):
            if self._entry(s).lhs == loc:
                return True
        return False

    def _first_write_at_or_after(self, loc: LocKey, t: int) -> int | None:
        for s in range(max(t, 1), self.n + 1):
            if self._entry(s).lhs == loc:
                return s
        return None

    def restore(self, loc: LocKey, t: int) -> tuple[CExpr, Prov] | None:
        """Expression over the current (post-n) state whose value equals
        ``loc``'s value just before entry ``t`` ran."""
        if not self._written_in(loc, t, self.n):
            return Cell(*loc), Prov("current", None, loc)
        if loc in self.stack:
            return None
        if self.budget <= 0:
            self.exhausted = True
            return None
        self.budget -= 1
        self.stack.append(loc)
        try:
            got = self._redefine(loc, t)
            if got is None:
                got = self._extract(loc, t)
            return got
        finally:
            self.stack.pop()

    def _subst(self, e: CExpr, t: int) -> tuple[CExpr, tuple[Prov, ...]] | None:
        """Rewrite every cell read in ``e`` to its value before entry ``t``."""
        if isinstance(e, Lit):
            return e, ()
        if isinstance(e, Cell):
            got = self.restore(e.loc(), t)
            if got is None:
                return None
            return got[0], (got[1],)
        if isinstance(e, Bin):
            left = self._subst(e.left, t)
            if left is None:
                return None
            right = self._subst(e.right, t)
            if right is None:
                return None
            return Bin(e.op, left[0], right[0]), left[1] + right[1]
        return None

    def _redefine(self, loc: LocKey, t: int) -> tuple[CExpr, Prov] | None:
        r = reaching_definition(self.path, loc, t)
        if r is NO_HISTORY:
            return None
        if r is INIT_DEF:
            value = _initial_value(self.path, loc)
            if value is None:
                return None
            return Lit(value), Prov("init-def", None, loc)
        got = self._subst(self._entry(r).rhs, r)
        if got is None:
            return None
        return got[0], Prov("redefine", r, loc, got[1])

    def _extract(self, loc: LocKey, t: int) -> tuple[CExpr, Prov] | None:
        w = self._first_write_at_or_after(loc, t)
        if w is None:
            return None
        r = reaching_definition(self.path, loc, t)
        low = r if isinstance(r, int) else 0
        for u in range(w, low, -1):
            e_u = self._entry(u)
            rhs = e_u.rhs
            if not isinstance(rhs, Bin) or rhs.op not in ("+", "-", "*"):
                continue
            if _cell_count(rhs, loc) != 1:
                continue
            probe = Cell(*loc)
            if rhs.left == probe:
                on_left, other = True, rhs.right
            elif rhs.right == probe:
                on_left, other = False, rhs.left
            else:
                continue  # the lone read sits below the top operator
            if rhs.op == "*":
                if not (isinstance(other, Lit) and other.value != 0):
                    continue
            got_w = self.restore(e_u.lhs, u + 1)
            if got_w is None:
                continue
            got_e = self._subst(other, u)
            if got_e is None:
                continue
            w_expr, w_prov = got_w
            e_expr, e_provs = got_e
            if rhs.op == "+":
                expr = Bin("-", w_expr, e_expr)
            elif rhs.op == "*":
                expr = Bin(EXACT_DIV, w_expr, e_expr)
            elif on_left:  # loc - other
                expr = Bin("+", w_expr, e_expr)
            else:  # other - loc
                expr = Bin("-", e_expr, w_expr)
            return expr, Prov("extract-from-use", u, loc, (w_prov,) + e_provs)
        return None


def _initial_value(path: ExecutionPath, loc: LocKey) -> int | None:
    owner, name, index = loc
    program = path.program
    if owner is None:
        decls = program.globals
    else:
        matches = [t for t in program.threads if t.name == owner]
        if not matches:
            return None
        decls = matches[0].locals
    for d in decls:
        if d.name != name:
            continue
        if d.init is None:
            return 0
        if isinstance(d.init, tuple):
            if index is None or not 0 <= index < len(d.init):
                return None
            return d.init[index]
        if isinstance(d.init, str):
            return path.constants.get(d.init)
        return d.init
    return None


def gen_reverse(path: ExecutionPath, n: int, budget: int = DEFAULT_BUDGET) -> GenResult:
    """Build reverse code for path entry ``n``, considering entries
    ``1..n`` only.  Deterministic in its arguments: regenerating after
    discarding a cached result gives an identical answer."""
    if not 1 <= n <= len(path.entries):
        raise ValueError(f"no path entry {n}")
    entry = path.entries[n - 1]
    loc = entry.lhs
    if entry.rhs == Cell(*loc):
        return ReverseCode(loc, (), Prov("current", None, loc))
    gen = _Generator(path, n, budget)
    got = gen.restore(loc, n)
    if got is None:
        reason = "budget exhausted" if gen.exhausted else "no restoring expression found"
        return NeedsStateSaving(reason)
    expr, prov = got
    return ReverseCode(loc, (ReverseStep(loc, expr),), prov)


def execute_reverse(machine: Machine, code: ReverseCode) -> None:
    """Apply reverse code to the machine's data state.

    Exact divisions verify their residue; a failure means the generator
    accepted something it should not have, and surfaces loudly."""
    for step in code.steps:
        value = machine.eval_cexpr(step.rhs)
        machine.write_loc(step.lhs, value)


# ---------------------------------------------------------------------------
# Static classification
# ---------------------------------------------------------------------------

SELF_INVERSE = "self-inverse"
STATE_SAVE = "state-save"


@dataclass(frozen=True, slots=True)
class InvertibleForm:
    """``new = old <shape> e`` for a scalar, undone without any saving.

    ``shape`` names where the updated scalar sits in its own right-hand
    side.  Wait and signal are fixed decrements/increments of their
    semaphore."""

    shape: str  # "x+e" | "e+x" | "x-e" | "e-x" | "x*e" | "e*x" | "wait" | "signal"

    def apply(self, old: int, e: int) -> int:
        if self.shape in ("x+e", "e+x"):
            return old + e
        if self.shape == "x-e":
            return old - e
        if self.shape == "e-x":
            return e - old
        if self.shape in ("x*e", "e*x"):
            return old * e
        if self.shape == "wait":
            return old - 1
        if self.shape == "signal":
            return old + 1
        raise ValueError(self.shape)

    def invert(self, new: int, e: int) -> int:
        if self.shape in ("x+e", "e+x"):
            return new - e
        if self.shape == "x-e":
            return new + e
        if self.shape == "e-x":
            return e - new
        if self.shape in ("x*e", "e*x"):
            if e == 0 or new % e != 0:
                raise ValueError(f"{new} is not invertible by *{e}")
            q = abs(new) // abs(e)
            return -q if (new < 0) != (e < 0) else q

        if self.shape == "wait":
            return new + 1
        if self.shape == "signal":
            return new - 1
        raise ValueError(self.shape)

    @property
    def e_on_left(self) -> bool:
        return self.shape in ("e+x", "e-x", "e*x")


def _reads_name(e, name: str) -> bool:
    from .lang import Index

    if isinstance(e, Var):
        return e.name == name
    if isinstance(e, Index):
        return e.name == name or _reads_name(e.index, name)
    if isinstance(e, Bin):
        return _reads_name(e.left, name) or _reads_name(e.right, name)
    return False


def _never_written_nonzero(program: Program) -> frozenset[str]:
    """Scalars that no command ever assigns and whose initializer is a
    nonzero literal: safe divisors for statically inverted products."""
    written: set[str] = set()

    def walk(b: Block) -> None:
        for cmd in b.body:
            if isinstance(cmd, Assign):
                written.add(cmd.target.name)
            elif isinstance(cmd, (Wait, Signal)):
                written.add(cmd.sem)
            elif isinstance(cmd, While):
                walk(cmd.body)
            elif isinstance(cmd, If):
                walk(cmd.then)
                if cmd.orelse is not None:
                    walk(cmd.orelse)

    for t in program.threads:
        walk(t.body)
    safe: set[str] = set()
    for d in list(program.globals) + [d for t in program.threads for d in t.locals]:
        if not d.is_array and d.name not in written:
            if isinstance(d.init, int) and d.init != 0:
                safe.add(d.name)
    return frozenset(safe)


def invertible_form(program: Program, cmd: Command) -> InvertibleForm | None:
    """Statically decide whether a command undoes itself without saved
    state, and in which shape.  None means it must be state-saved."""
    if isinstance(cmd, Wait):
        return InvertibleForm("wait")
    if isinstance(cmd, Signal):
        return InvertibleForm("signal")
    if not isinstance(cmd, Assign):
        return None
    if cmd.target.index is not None:
        # Array slots: the index could re-evaluate differently once
        # unrelated state moves, so take no static chances.
        return None
    x = cmd.target.name
    rhs = cmd.rhs
    if not isinstance(rhs, Bin):
        return None
    x_left = isinstance(rhs.left, Var) and rhs.left.name == x
    x_right = isinstance(rhs.right, Var) and rhs.right.name == x
    if x_left == x_right:  # both or neither
        return None
    other = rhs.right if x_left else rhs.left
    if _reads_name(other, x):
        return None
    if rhs.op == "+":
        return InvertibleForm("x+e" if x_left else "e+x")
    if rhs.op == "-":
        return InvertibleForm("x-e" if x_left else "e-x")
    if rhs.op == "*":
        nonzero_const = isinstance(other, Lit) and other.value != 0
        if not nonzero_const:
            if isinstance(other, Var) and other.name in _never_written_nonzero(program):
                nonzero_const = True
        if nonzero_const:
            return InvertibleForm("x*e" if x_left else "e*x")
    return None


def classify_static(program: Program) -> dict[int, str]:
    """Label every state-changing command: SELF_INVERSE commands are
    undone by compile-time derived inverses, the rest by saved values."""
    labels: dict[int, str] = {}

    def walk(b: Block) -> None:
        for cmd in b.body:
            if isinstance(cmd, (Assign, Wait, Signal)):
                form = invertible_form(program, cmd)
                labels[cmd.cid] = SELF_INVERSE if form is not None else STATE_SAVE
            elif isinstance(cmd, While):
                walk(cmd.body)
            elif isinstance(cmd, If):
                walk(cmd.then)
                if cmd.orelse is not None:
                    walk(cmd.orelse)

    for t in program.threads:
        walk(t.body)
    return labels


def static_forms(program: Program) -> dict[int, InvertibleForm]:
    """The invertible commands' shapes, keyed by command id."""
    forms: dict[int, InvertibleForm] = {}

    def walk(b: Block) -> None:
        for cmd in b.body:
            if isinstance(cmd, (Assign, Wait, Signal)):
                form = invertible_form(program, cmd)
                if form is not None:
                    forms[cmd.cid] = form
            elif isinstance(cmd, While):
                walk(cmd.body)
            elif isinstance(cmd, If):
                walk(cmd.then)
                if cmd.orelse is not None:
                    walk(cmd.orelse)

    for t in program.threads:
        walk(t.body)
    return forms
