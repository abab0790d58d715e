"""Parser, printer, and syntactic helper coverage."""

import pytest
from hypothesis import given, strategies as st

from retrograde.lang import (
    Assign,
    Bin,
    Index,
    LangError,
    Lit,
    ParseError,
    Signal,
    Target,
    Var,
    Wait,
    While,
    block_heads,
    lhs_of,
    parse_program,
    pretty_print,
    render_expr,
    rhs_vars,
    scope_map,
)
from conftest import bb, command_at_line, load_fixture, state_change_commands

SMALL = """\
int g := 0

thread Main {
  int x := 2
  while (x > 0) {
    g := g + x
    x := x - 1
  }
  if (g == 3) {
    g := g * 2
  } else {
    skip
  }
}
"""


def test_parse_small_program_shape():
    p = parse_program(SMALL)
    assert [t.name for t in p.threads] == ["Main"]
    assert p.globals[0].name == "g" and p.globals[0].init == 0
    main = p.threads[0]
    assert [d.name for d in main.locals] == ["x"]
    loop = main.body.body[0]
    assert isinstance(loop, While)
    assert [c.line for c in loop.body.body] == [6, 7]


def test_roundtrip_is_identity_for_bounded_buffer():
    program, _ = bb(3, 5)
    printed = pretty_print(program)
    assert parse_program(printed, ("M", "N")) == program


def test_roundtrip_preserves_lines_and_cids():
    p1 = parse_program(SMALL)
    p2 = parse_program(pretty_print(p1))
    assert p1 == p2  # dataclass equality covers cids and lines


@pytest.mark.parametrize(
    "name", ["selfref", "twothread", "semloop", "deadlock"]
)
def test_fixture_files_roundtrip(name):
    program, consts = load_fixture(name)
    assert parse_program(pretty_print(program), tuple(consts)) == program


@pytest.mark.parametrize(
    "source, fragment",
    [
        ("int x := 0\nint x := 1\nthread T {\n  x := 1\n}\n", "duplicate"),
        ("int x := 0\nthread T {\n  int x := 1\n  x := 2\n}\n", "duplicate or shadowing"),
        ("thread T {\n  y := 1\n}\n", "undeclared"),
        ("thread T {\n  int a[0]\n  a[0] := 1\n}\n", "positive"),
        ("thread T {\n  int a[2] := {1, 2, 3}\n  a[0] := 1\n}\n", "3 elements"),
        ("int x := 0\nthread T {\n  x[0] := 1\n}\n", "not a declared array"),
        ("thread T {\n  int a[2]\n  a := 1\n}\n", "without an index"),
        ("thread T {\n  wait(nope)\n}\n", "global scalar"),
        ("int a[3]\nthread T {\n  wait(a)\n}\n", "global scalar"),
        ("thread T {\n  skip\n  int x := 1\n  x := 2\n}\n", "precede"),
        ("thread T {\n  while (1 > 0) {\n    skip\n  } else {\n    skip\n  }\n}\n", "else"),
        ("thread T {\n  skip\n}\nint g := 0\n", "precede all threads"),
    ],
)
def test_parse_rejections(source, fragment):
    with pytest.raises((ParseError, LangError)) as info:
        parse_program(source)
    assert fragment in str(info.value)


def test_constant_rules():
    ok = parse_program("int a[K]\nthread T {\n  a[0] := K\n}\n", ("K",))
    assert ok.globals[0].size == "K"
    with pytest.raises(ParseError, match="constant"):
        parse_program("thread T {\n  int q := 0\n  K := 3\n}\n", ("K",))
    with pytest.raises(ParseError, match="named constant"):
        parse_program("int x := K\nthread T {\n  skip\n}\n")


def test_lhs_and_rhs_vars():
    program, _ = bb(3, 5)
    fill = command_at_line(program, 16)  # buf[rear] := src[p]
    assert lhs_of(fill) == Target("buf", Var("rear"))
    reads = rhs_vars(fill)
    assert ("src", Var("p")) in reads and "rear" in reads and "p" in reads

    w = command_at_line(program, 15)
    assert isinstance(w, Wait) and lhs_of(w) == Target("empty", None)
    assert rhs_vars(w) == frozenset({"empty"})

    s = command_at_line(program, 20)
    assert isinstance(s, Signal) and rhs_vars(s) == frozenset({"full"})


def test_lhs_of_rejects_control():
    program = parse_program(SMALL)
    loop = program.threads[0].body.body[0]
    with pytest.raises(LangError):
        lhs_of(loop)


def test_block_heads_bounded_buffer():
    program, _ = bb(3, 5)
    heads = block_heads(program)
    head_lines = set()
    for cmd in state_change_commands(program):
        if cmd.cid in heads:
            head_lines.add(cmd.line)
    # first command of each loop body, plus the commands after each
    # wait/signal; the whiles themselves head the thread bodies
    assert head_lines == {15, 16, 21, 31, 32, 37}
    whiles = [t.body.body[0] for t in program.threads]
    assert all(w.cid in heads for w in whiles)


def test_scope_map():
    program, _ = bb(3, 5)
    scopes = scope_map(program)
    assert scopes["Producer"]["g"] is None
    assert scopes["Producer"]["p"] == "Producer"
    assert "p" not in scopes["Consumer"]


def test_render_expr_precedence():
    # (a + b) * c keeps its parens; a + b * c does not grow any
    e1 = Bin("*", Bin("+", Var("a"), Var("b")), Var("c"))
    e2 = Bin("+", Var("a"), Bin("*", Var("b"), Var("c")))
    assert render_expr(e1) == "(a + b) * c"
    assert render_expr(e2) == "a + b * c"
    e3 = Bin("-", Var("a"), Bin("-", Var("b"), Var("c")))
    assert render_expr(e3) == "a - (b - c)"


# -- property: rendering then reparsing an expression is the identity --------

_names = st.sampled_from(["b", "c"])  # "a" is the template's array


def _exprs(depth):
    if depth == 0:
        return st.one_of(
            st.integers(min_value=0, max_value=99).map(Lit),
            _names.map(Var),
            st.tuples(st.sampled_from(["a"]), st.integers(0, 3)).map(
                lambda t: Index(t[0], Lit(t[1]))
            ),
        )
    sub = _exprs(depth - 1)
    return st.one_of(
        _exprs(0),
        st.tuples(st.sampled_from(["+", "-", "*", "/", "%"]), sub, sub).map(
            lambda t: Bin(t[0], t[1], t[2])
        ),
    )


@given(_exprs(3))
def test_expr_render_parse_roundtrip(expr):
    source = f"int a[4]\nint b := 0\nint c := 0\nthread T {{\n  b := {render_expr(expr)}\n}}\n"
    program = parse_program(source)
    cmd = program.threads[0].body.body[0]
    assert isinstance(cmd, Assign)
    assert cmd.rhs == expr
