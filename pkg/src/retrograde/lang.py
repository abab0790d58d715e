"""Abstract syntax, parser, and printer for the debuggee language.

The language is a small line-oriented imperative language with integer
scalars and fixed-size integer arrays, `:=` assignment, `while`/`if`
control flow, and two built-in semaphore primitives (`wait`, `signal`)
that give threads something to block on.  A program is a sequence of
global declarations followed by one or more `thread` blocks::

    int buf[M]
    int g := 0

    thread Producer {
      int p := 0
      while (p < N) {
        wait(empty)
        buf[p % M] := p
        p := p + 1
        signal(full)
      }
    }

Syntax rules kept deliberately rigid so fixtures stay diff-friendly:

* one declaration or command per line; `//` starts a comment
* blocks open with a trailing `{` on the header line and close with a
  lone `}` (or `} else {` between the arms of an `if`)
* arithmetic operators are `+ - * / %` over signed 64-bit integers;
  division and modulo truncate toward zero
* guards are comparisons (`==`, `<`, `>`), negation `!`, or the
  literals `true`/`false`; guards appear only in `if`/`while` headers
* array sizes are positive integer literals or named compile-time
  constants supplied to :func:`parse_program`; constants are read-only

Every command node carries a stable ``cid`` (unique within a program,
identical across reparses of identical text) plus its source line.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Iterable, Union


class LangError(Exception):
    """Base class for parse-time failures."""


class ParseError(LangError):
    def __init__(self, message: str, line: int):
        super().__init__(f"line {line}: {message}")
        self.line = line


# ---------------------------------------------------------------------------
# Expressions
# ---------------------------------------------------------------------------

ARITH_OPS = ("+", "-", "*", "/", "%")
CMP_OPS = ("==", "<", ">")

# Internal marker for divisions produced by inverting a multiplication.
# Evaluators must verify the division is exact; rendering shows plain "/".
EXACT_DIV = "/exact"


@dataclass(frozen=True, slots=True)
class Lit:
    value: int


@dataclass(frozen=True, slots=True)
class Var:
    name: str


@dataclass(frozen=True, slots=True)
class Index:
    """Array read ``name[index]``."""

    name: str
    index: "Expr"


@dataclass(frozen=True, slots=True)
class Bin:
    op: str
    left: "Expr"
    right: "Expr"


@dataclass(frozen=True, slots=True)
class Cell:
    """A scope-resolved storage location used in concretized expressions.

    ``owner`` is the declaring thread's name, or None for a global.
    ``index`` is a concrete element index, or None for a scalar.  Parsed
    source never contains Cell nodes; they appear in recorded path
    entries and in generated reverse code, where expressions must be
    meaningful outside any single thread's scope.
    """

    owner: str | None
    name: str
    index: int | None

    def loc(self) -> "LocKey":
        return (self.owner, self.name, self.index)


# (owner, name, index) with owner None for globals, index None for scalars.
LocKey = tuple[Union[str, None], str, Union[int, None]]

Expr = Union[Lit, Var, Index, Bin, Cell]


@dataclass(frozen=True, slots=True)
class BoolLit:
    value: bool


@dataclass(frozen=True, slots=True)
class Cmp:
    op: str
    left: Expr
    right: Expr


@dataclass(frozen=True, slots=True)
class Not:
    operand: "Guard"


Guard = Union[BoolLit, Cmp, Not]


# ---------------------------------------------------------------------------
# Commands and declarations
# ---------------------------------------------------------------------------


@dataclass(frozen=True, slots=True)
class Target:
    """Assignment left-hand side; ``index`` unevaluated, None for scalars."""

    name: str
    index: Expr | None


@dataclass(frozen=True, slots=True)
class Assign:
    target: Target
    rhs: Expr
    cid: int
    line: int


@dataclass(frozen=True, slots=True)
class Skip:
    cid: int
    line: int


@dataclass(frozen=True, slots=True)
class Block:
    """A command sequence; the body of a thread, loop, or branch arm."""

    body: tuple["Command", ...]
    cid: int
    line: int


@dataclass(frozen=True, slots=True)
class If:
    guard: Guard
    then: Block
    orelse: Block | None
    cid: int
    line: int


@dataclass(frozen=True, slots=True)
class While:
    guard: Guard
    body: Block
    cid: int
    line: int


@dataclass(frozen=True, slots=True)
class Wait:
    sem: str
    cid: int
    line: int


@dataclass(frozen=True, slots=True)
class Signal:
    sem: str
    cid: int
    line: int


Command = Union[Assign, Skip, Block, If, While, Wait, Signal]


@dataclass(frozen=True, slots=True)
class Declaration:
    """``int name``, ``int name := n``, ``int name[size]``, or an array
    with a literal initializer list.  ``size`` is None for scalars, an
    int for literal sizes, or the name of a compile-time constant; a
    scalar initializer may likewise be a constant name."""

    name: str
    size: int | str | None
    init: int | str | tuple[int, ...] | None
    line: int

    @property
    def is_array(self) -> bool:
        return self.size is not None


@dataclass(frozen=True, slots=True)
class ThreadDef:
    name: str
    locals: tuple[Declaration, ...]
    body: Block
    line: int


@dataclass(frozen=True, slots=True)
class Program:
    globals: tuple[Declaration, ...]
    threads: tuple[ThreadDef, ...]
    constants: tuple[str, ...]


# ---------------------------------------------------------------------------
# Tokenizer
# ---------------------------------------------------------------------------

_TOKEN_RE = re.compile(
    r"(?P<ws>\s+)"
    r"|(?P<int>\d+)"
    r"|(?P<name>[A-Za-z_][A-Za-z_0-9]*)"
    r"|(?P<op>:=|==|[+\-*/%<>!(){}\[\],])"
)

_KEYWORDS = frozenset({"int", "thread", "while", "if", "else", "skip", "wait", "signal", "true", "false"})


def _tokenize_line(text: str, line_no: int) -> list[str]:
    code = text.split("//", 1)[0]
    tokens: list[str] = []
    pos = 0
    while pos < len(code):
        m = _TOKEN_RE.match(code, pos)
        if m is None:
            raise ParseError(f"unexpected character {code[pos]!r}", line_no)
        pos = m.end()
        if m.lastgroup != "ws":
            tokens.append(m.group())
    return tokens


class _Cursor:
    """Token cursor over a single source line."""

    def __init__(self, tokens: list[str], line: int):
        self.tokens = tokens
        self.line = line
        self.pos = 0

    def peek(self) -> str | None:
        return self.tokens[self.pos] if self.pos < len(self.tokens) else None

    def next(self) -> str:
        tok = self.peek()
        if tok is None:
            raise ParseError("unexpected end of line", self.line)
        self.pos += 1
        return tok

    def expect(self, tok: str) -> None:
        got = self.next()
        if got != tok:
            raise ParseError(f"expected {tok!r}, found {got!r}", self.line)

    def done(self) -> bool:
        return self.pos >= len(self.tokens)

    def require_done(self) -> None:
        if not self.done():
            raise ParseError(f"trailing tokens starting at {self.peek()!r}", self.line)


def _is_name(tok: str | None) -> bool:
    return tok is not None and tok[0].isalpha() or tok is not None and tok[0] == "_"


# ---------------------------------------------------------------------------
# Parser
# ---------------------------------------------------------------------------


class _Parser:
    def __init__(self, text: str, constant_names: tuple[str, ...]):
        self.lines: list[tuple[int, list[str]]] = []
        for i, raw in enumerate(text.splitlines(), start=1):
            toks = _tokenize_line(raw, i)
            if toks:
                self.lines.append((i, toks))
        self.idx = 0
        self.constants = constant_names
        self._next_cid = 0

    # -- token plumbing ----------------------------------------------------

    def _cid(self) -> int:
        self._next_cid += 1
        return self._next_cid

    def _peek_line(self) -> _Cursor | None:
        if self.idx >= len(self.lines):
            return None
        line_no, toks = self.lines[self.idx]
        return _Cursor(list(toks), line_no)

    def _take_line(self) -> _Cursor:
        cur = self._peek_line()
        if cur is None:
            raise ParseError("unexpected end of input", self.lines[-1][0] if self.lines else 1)
        self.idx += 1
        return cur

    # -- expressions -------------------------------------------------------

    def _parse_expr(self, cur: _Cursor) -> Expr:
        left = self._parse_term(cur)
        while cur.peek() in ("+", "-"):
            op = cur.next()
            right = self._parse_term(cur)
            left = Bin(op, left, right)
        return left

    def _parse_term(self, cur: _Cursor) -> Expr:
        left = self._parse_factor(cur)
        while cur.peek() in ("*", "/", "%"):
            op = cur.next()
            right = self._parse_factor(cur)
            left = Bin(op, left, right)
        return left

    def _parse_factor(self, cur: _Cursor) -> Expr:
        tok = cur.peek()
        if tok is None:
            raise ParseError("expected an expression", cur.line)
        if tok == "(":
            cur.next()
            inner = self._parse_expr(cur)
            cur.expect(")")
            return inner
        if tok == "-":
            cur.next()
            operand = self._parse_factor(cur)
            if isinstance(operand, Lit):
                return Lit(-operand.value)
            return Bin("-", Lit(0), operand)
        if tok.isdigit():
            cur.next()
            return Lit(int(tok))
        if _is_name(tok):
            if tok in _KEYWORDS:
                raise ParseError(f"keyword {tok!r} is not a value", cur.line)
            cur.next()
            if cur.peek() == "[":
                cur.next()
                index = self._parse_expr(cur)
                cur.expect("]")
                return Index(tok, index)
            return Var(tok)
        raise ParseError(f"unexpected token {tok!r} in expression", cur.line)

    def _parse_guard(self, cur: _Cursor) -> Guard:
        tok = cur.peek()
        if tok == "!":
            cur.next()
            return Not(self._parse_guard_atom(cur))
        return self._parse_guard_atom(cur)

    def _parse_guard_atom(self, cur: _Cursor) -> Guard:
        tok = cur.peek()
        if tok == "true":
            cur.next()
            return BoolLit(True)
        if tok == "false":
            cur.next()
            return BoolLit(False)
        if tok == "!":
            cur.next()
            return Not(self._parse_guard_atom(cur))
        if tok == "(" and self._guard_ahead(cur):
            cur.next()
            inner = self._parse_guard(cur)
            cur.expect(")")
            return inner
        left = self._parse_expr(cur)
        op = cur.next()
        if op not in CMP_OPS:
            raise ParseError(f"expected a comparison operator, found {op!r}", cur.line)
        right = self._parse_expr(cur)
        return Cmp(op, left, right)

    def _guard_ahead(self, cur: _Cursor) -> bool:
        # Distinguish "(a > b)" from a parenthesized arithmetic operand
        # "(a + b) > c" by scanning for a comparison before the paren closes.
        depth = 0
        for tok in cur.tokens[cur.pos:]:
            if tok == "(":
                depth += 1
            elif tok == ")":
                depth -= 1
                if depth == 0:
                    return False
            elif depth == 1 and tok in CMP_OPS:
                return True
        return False

    # -- declarations --------------------------------------------------------

    def _parse_declaration(self, cur: _Cursor) -> Declaration:
        cur.expect("int")
        name = cur.next()
        if not _is_name(name) or name in _KEYWORDS:
            raise ParseError(f"bad declaration name {name!r}", cur.line)
        size: int | str | None = None
        init: int | tuple[int, ...] | None = None
        if cur.peek() == "[":
            cur.next()
            size_tok = cur.next()
            if size_tok.isdigit():
                size = int(size_tok)
                if size <= 0:
                    raise ParseError("array size must be positive", cur.line)
            elif _is_name(size_tok) and size_tok in self.constants:
                size = size_tok
            else:
                raise ParseError(
                    f"array size must be a positive literal or a named constant, found {size_tok!r}",
                    cur.line,
                )
            cur.expect("]")
        if cur.peek() == ":=":
            cur.next()
            if size is None:
                init = self._parse_init_scalar(cur)
            else:
                cur.expect("{")
                values = [self._parse_int_literal(cur)]
                while cur.peek() == ",":
                    cur.next()
                    values.append(self._parse_int_literal(cur))
                cur.expect("}")
                init = tuple(values)
                if isinstance(size, int) and len(init) != size:
                    raise ParseError(
                        f"initializer has {len(init)} elements for array of size {size}", cur.line
                    )
        cur.require_done()
        return Declaration(name, size, init, cur.line)

    def _parse_init_scalar(self, cur: _Cursor) -> int | str:
        tok = cur.peek()
        if tok is not None and _is_name(tok) and tok not in _KEYWORDS:
            if tok not in self.constants:
                raise ParseError(
                    f"scalar initializer must be a literal or a named constant, found {tok!r}",
                    cur.line,
                )
            cur.next()
            return tok
        return self._parse_int_literal(cur)

    def _parse_int_literal(self, cur: _Cursor) -> int:
        tok = cur.next()
        neg = False
        if tok == "-":
            neg = True
            tok = cur.next()
        if not tok.isdigit():
            raise ParseError(f"expected an integer literal, found {tok!r}", cur.line)
        return -int(tok) if neg else int(tok)

    # -- commands ------------------------------------------------------------

    def _parse_block_body(self, first_line: int) -> tuple[Block, str]:
        """Parse commands until a closing line; returns (block, closer) where
        closer is "}" or "} else {"."""
        body: list[Command] = []
        body_line: int | None = None
        while True:
            cur = self._peek_line()
            if cur is None:
                raise ParseError("missing closing brace", first_line)
            toks = cur.tokens
            if toks == ["}"]:
                self.idx += 1
                closer = "}"
                break
            if toks == ["}", "else", "{"]:
                self.idx += 1
                closer = "} else {"
                break
            cmd = self._parse_command()
            if body_line is None:
                body_line = cmd.line
            body.append(cmd)
        block = Block(tuple(body), self._cid(), body_line if body_line is not None else first_line)
        return block, closer

    def _parse_command(self) -> Command:
        cur = self._take_line()
        tok = cur.peek()
        if tok == "skip":
            cur.next()
            cur.require_done()
            return Skip(self._cid(), cur.line)
        if tok == "wait" or tok == "signal":
            kw = cur.next()
            cur.expect("(")
            sem = cur.next()
            if not _is_name(sem) or sem in _KEYWORDS:
                raise ParseError(f"bad semaphore name {sem!r}", cur.line)
            cur.expect(")")
            cur.require_done()
            cls = Wait if kw == "wait" else Signal
            return cls(sem, self._cid(), cur.line)
        if tok == "while":
            cur.next()
            cur.expect("(")
            guard = self._parse_guard(cur)
            cur.expect(")")
            cur.expect("{")
            cur.require_done()
            body, closer = self._parse_block_body(cur.line)
            if closer != "}":
                raise ParseError("unexpected 'else' after a while body", cur.line)
            return While(guard, body, self._cid(), cur.line)
        if tok == "if":
            cur.next()
            cur.expect("(")
            guard = self._parse_guard(cur)
            cur.expect(")")
            cur.expect("{")
            cur.require_done()
            then, closer = self._parse_block_body(cur.line)
            orelse: Block | None = None
            if closer == "} else {":
                orelse, closer2 = self._parse_block_body(cur.line)
                if closer2 != "}":
                    raise ParseError("unexpected 'else' after an else body", cur.line)
            return If(guard, then, orelse, self._cid(), cur.line)
        if tok == "int":
            raise ParseError("declarations must precede the thread's commands", cur.line)
        # Assignment: NAME [ "[" expr "]" ] := expr
        name = cur.next()
        if not _is_name(name) or name in _KEYWORDS:
            raise ParseError(f"unexpected token {name!r}", cur.line)
        index: Expr | None = None
        if cur.peek() == "[":
            cur.next()
            index = self._parse_expr(cur)
            cur.expect("]")
        cur.expect(":=")
        rhs = self._parse_expr(cur)
        cur.require_done()
        return Assign(Target(name, index), rhs, self._cid(), cur.line)

    # -- top level -----------------------------------------------------------

    def parse(self) -> Program:
        globals_: list[Declaration] = []
        threads: list[ThreadDef] = []
        while True:
            cur = self._peek_line()
            if cur is None:
                break
            tok = cur.peek()
            if tok == "int":
                if threads:
                    raise ParseError("global declarations must precede all threads", cur.line)
                self.idx += 1
                globals_.append(self._parse_declaration(cur))
            elif tok == "thread":
                self.idx += 1
                cur.next()
                name = cur.next()
                if not _is_name(name) or name in _KEYWORDS:
                    raise ParseError(f"bad thread name {name!r}", cur.line)
                cur.expect("{")
                cur.require_done()
                header_line = cur.line
                locals_: list[Declaration] = []
                while True:
                    inner = self._peek_line()
                    if inner is not None and inner.peek() == "int":
                        self.idx += 1
                        locals_.append(self._parse_declaration(inner))
                    else:
                        break
                body, closer = self._parse_block_body(header_line)
                if closer != "}":
                    raise ParseError("unexpected 'else' at thread level", header_line)
                threads.append(ThreadDef(name, tuple(locals_), body, header_line))
            else:
                raise ParseError(f"expected a declaration or a thread, found {tok!r}", cur.line)
        program = Program(tuple(globals_), tuple(threads), self.constants)
        _check_program(program)
        return program


def parse_program(text: str, constant_names: Iterable[str] = ()) -> Program:
    """Parse source text into a :class:`Program`.

    ``constant_names`` pre-declares read-only compile-time constants
    (array size symbols and the like); their integer values are bound
    later, when a machine is initialized.
    """
    return _Parser(text, tuple(constant_names)).parse()


# ---------------------------------------------------------------------------
# Static checks
# ---------------------------------------------------------------------------


def scope_map(program: Program) -> dict[str, dict[str, str | None]]:
    """Per-thread name resolution: thread -> {name -> owner}.

    Owner is None for globals, the thread name for locals.  Constants
    are not included; resolve them separately via ``program.constants``.
    """
    base = {d.name: None for d in program.globals}
    return {
        t.name: {**base, **{d.name: t.name for d in t.locals}}
        for t in program.threads
    }


def _check_scope_decls(decls: Iterable[Declaration], taken: set[str], what: str) -> None:
    for d in decls:
        if d.name in taken:
            raise ParseError(f"duplicate or shadowing declaration of {d.name!r} in {what}", d.line)
        taken.add(d.name)


def _check_program(program: Program) -> None:
    if not program.threads:
        raise LangError("a program needs at least one thread")
    global_names = set(program.constants)
    _check_scope_decls(program.globals, global_names, "globals")
    arrays = {d.name for d in program.globals if d.is_array}
    global_scalars = {d.name for d in program.globals if not d.is_array}
    for t in program.threads:
        names = set(global_names)
        _check_scope_decls(t.locals, names, f"thread {t.name}")
        local_arrays = arrays | {d.name for d in t.locals if d.is_array}
        scalars = global_scalars | {d.name for d in t.locals if not d.is_array} | set(program.constants)
        _check_commands(t.body, scalars, local_arrays, global_scalars, set(program.constants), t.name)


def _check_commands(
    block: Block,
    scalars: set[str],
    arrays: set[str],
    global_scalars: set[str],
    constants: set[str],
    thread: str,
) -> None:
    def check_expr(e: Expr, line: int) -> None:
        if isinstance(e, Lit):
            return
        if isinstance(e, Var):
            if e.name in arrays:
                raise ParseError(f"array {e.name!r} used without an index", line)
            if e.name not in scalars:
                raise ParseError(f"undeclared variable {e.name!r}", line)
            return
        if isinstance(e, Index):
            if e.name not in arrays:
                raise ParseError(f"{e.name!r} is not a declared array", line)
            check_expr(e.index, line)
            return
        if isinstance(e, Bin):
            check_expr(e.left, line)
            check_expr(e.right, line)
            return
        raise LangError(f"unexpected node {e!r} in parsed source")

    def check_guard(g: Guard, line: int) -> None:
        if isinstance(g, BoolLit):
            return
        if isinstance(g, Not):
            check_guard(g.operand, line)
            return
        check_expr(g.left, line)
        check_expr(g.right, line)

    def walk(b: Block) -> None:
        for cmd in b.body:
            if isinstance(cmd, Assign):
                if cmd.target.name in constants:
                    raise ParseError(f"cannot assign to constant {cmd.target.name!r}", cmd.line)
                if cmd.target.index is None:
                    if cmd.target.name in arrays:
                        raise ParseError(f"array {cmd.target.name!r} assigned without an index", cmd.line)
                    if cmd.target.name not in scalars:
                        raise ParseError(f"undeclared variable {cmd.target.name!r}", cmd.line)
                else:
                    if cmd.target.name not in arrays:
                        raise ParseError(f"{cmd.target.name!r} is not a declared array", cmd.line)
                    check_expr(cmd.target.index, cmd.line)
                check_expr(cmd.rhs, cmd.line)
            elif isinstance(cmd, (Wait, Signal)):
                if cmd.sem not in global_scalars:
                    raise ParseError(
                        f"wait/signal target {cmd.sem!r} must be a declared global scalar", cmd.line
                    )
            elif isinstance(cmd, While):
                check_guard(cmd.guard, cmd.line)
                walk(cmd.body)
            elif isinstance(cmd, If):
                check_guard(cmd.guard, cmd.line)
                walk(cmd.then)
                if cmd.orelse is not None:
                    walk(cmd.orelse)
            elif isinstance(cmd, (Skip, Block)):
                if isinstance(cmd, Block):
                    walk(cmd)
            else:
                raise LangError(f"unexpected command {cmd!r}")

    walk(block)


# ---------------------------------------------------------------------------
# Syntactic helpers
# ---------------------------------------------------------------------------


def lhs_of(cmd: Command) -> Target:
    """The syntactic left-hand side of a state-changing command.

    For assignments the index expression is returned unevaluated; wait
    and signal act on their semaphore."""
    if isinstance(cmd, Assign):
        return cmd.target
    if isinstance(cmd, (Wait, Signal)):
        return Target(cmd.sem, None)
    raise LangError(f"{type(cmd).__name__} has no left-hand side")


def rhs_vars(cmd: Command) -> frozenset:
    """Locations read by a state-changing command.

    Scalar reads appear as names; array reads as (name, index_expr)
    pairs.  Index expressions of the left-hand side count as reads."""
    reads: set = set()

    def walk(e: Expr) -> None:
        if isinstance(e, Var):
            reads.add(e.name)
        elif isinstance(e, Index):
            reads.add((e.name, e.index))
            walk(e.index)
        elif isinstance(e, Bin):
            walk(e.left)
            walk(e.right)

    if isinstance(cmd, Assign):
        walk(cmd.rhs)
        if cmd.target.index is not None:
            walk(cmd.target.index)
        return frozenset(reads)
    if isinstance(cmd, (Wait, Signal)):
        return frozenset({cmd.sem})
    raise LangError(f"{type(cmd).__name__} has no right-hand side")


def block_heads(program: Program) -> frozenset[int]:
    """Command ids that begin a basic block.

    Blocks start at thread bodies, loop bodies, branch arms, and at the
    command following a loop or a semaphore call.  The interpreter logs
    one block-entry record each time execution begins one of these."""
    heads: set[int] = set()

    def mark_first(b: Block) -> None:
        if b.body:
            heads.add(b.body[0].cid)

    def walk(b: Block) -> None:
        prev: Command | None = None
        for cmd in b.body:
            if prev is not None and isinstance(prev, (While, Wait, Signal)):
                heads.add(cmd.cid)
            if isinstance(cmd, While):
                mark_first(cmd.body)
                walk(cmd.body)
            elif isinstance(cmd, If):
                mark_first(cmd.then)
                walk(cmd.then)
                if cmd.orelse is not None:
                    mark_first(cmd.orelse)
                    walk(cmd.orelse)
            prev = cmd

    for t in program.threads:
        mark_first(t.body)
        walk(t.body)
    return frozenset(heads)


# ---------------------------------------------------------------------------
# Printer
# ---------------------------------------------------------------------------


def render_expr(e: Expr | Guard) -> str:
    if isinstance(e, Lit):
        return str(e.value)
    if isinstance(e, Var):
        return e.name
    if isinstance(e, Index):
        return f"{e.name}[{render_expr(e.index)}]"
    if isinstance(e, Cell):
        suffix = f"[{e.index}]" if e.index is not None else ""
        return f"{e.name}{suffix}"
    if isinstance(e, Bin):
        op = "/" if e.op == EXACT_DIV else e.op
        left = render_expr(e.left)
        right = render_expr(e.right)
        if isinstance(e.left, Bin) and _prec(e.left.op) < _prec(e.op):
            left = f"({left})"
        if isinstance(e.right, Bin) and _prec(e.right.op) <= _prec(e.op):
            right = f"({right})"
        return f"{left} {op} {right}"
    if isinstance(e, BoolLit):
        return "true" if e.value else "false"
    if isinstance(e, Cmp):
        return f"{render_expr(e.left)} {e.op} {render_expr(e.right)}"
    if isinstance(e, Not):
        return f"!({render_expr(e.operand)})"
    raise LangError(f"cannot render {e!r}")


def _prec(op: str) -> int:
    return 1 if op in ("+", "-") else 2


def pretty_print(program: Program) -> str:
    """Render a program back to source, preserving every recorded line
    number so a reparse yields a structurally identical tree."""
    out: list[str] = []

    def emit(line_no: int, text: str) -> None:
        while len(out) + 1 < line_no:
            out.append("")
        if len(out) + 1 != line_no:
            raise LangError(f"printer collision at line {line_no}: {text!r}")
        out.append(text)

    def emit_next(text: str) -> None:
        out.append(text)

    def decl_text(d: Declaration) -> str:
        size = f"[{d.size}]" if d.size is not None else ""
        if d.init is None:
            return f"int {d.name}{size}"
        if isinstance(d.init, tuple):
            values = ", ".join(str(v) for v in d.init)
            return f"int {d.name}{size} := {{{values}}}"
        return f"int {d.name}{size} := {d.init}"

    def emit_block(b: Block, indent: str) -> None:
        for cmd in b.body:
            if isinstance(cmd, Assign):
                lhs = cmd.target.name
                if cmd.target.index is not None:
                    lhs += f"[{render_expr(cmd.target.index)}]"
                emit(cmd.line, f"{indent}{lhs} := {render_expr(cmd.rhs)}")
            elif isinstance(cmd, Skip):
                emit(cmd.line, f"{indent}skip")
            elif isinstance(cmd, Wait):
                emit(cmd.line, f"{indent}wait({cmd.sem})")
            elif isinstance(cmd, Signal):
                emit(cmd.line, f"{indent}signal({cmd.sem})")
            elif isinstance(cmd, While):
                emit(cmd.line, f"{indent}while ({render_expr(cmd.guard)}) {{")
                emit_block(cmd.body, indent + "  ")
                emit_next(f"{indent}}}")
            elif isinstance(cmd, If):
                emit(cmd.line, f"{indent}if ({render_expr(cmd.guard)}) {{")
                emit_block(cmd.then, indent + "  ")
                if cmd.orelse is not None:
                    emit_next(f"{indent}}} else {{")
                    emit_block(cmd.orelse, indent + "  ")
                emit_next(f"{indent}}}")
            else:
                raise LangError(f"cannot print {cmd!r}")

    for d in program.globals:
        emit(d.line, decl_text(d))
    for t in program.threads:
        emit(t.line, f"thread {t.name} {{")
        for d in t.locals:
            emit(d.line, f"  {decl_text(d)}")
        emit_block(t.body, "  ")
        emit_next("}")
    return "\n".join(out) + "\n"
