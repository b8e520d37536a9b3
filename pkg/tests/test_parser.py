"""Surface syntax: round-trips, interval brackets, expressions, errors."""
from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from tempock.model import (
    BinOp, BoolLit, IntLit, Not, TimeInterval, Var, expr_str, seq_list,
)
from tempock.parser import ParseError, parse_program, parse_property, pretty_print

from conftest import corpus_names, load_program


# -- whole-file round trips

@pytest.mark.parametrize("name", corpus_names())
def test_corpus_round_trip(name):
    prog = load_program(name)
    assert parse_program(pretty_print(prog)) == prog


def test_pretty_print_is_idempotent():
    prog = load_program("periodic20.fcr")
    once = pretty_print(prog)
    assert pretty_print(parse_program(once)) == once


# -- time intervals

WAIT_TEMPLATE = """\
process p [a : none] is
  states s0
  from s0 wait {iv}; a; to s0
component main is
  port a1 : none in [0,1]
  par * in
    q : p [a1]
  end
"""


def parse_wait_interval(text: str) -> TimeInterval:
    prog = parse_program(WAIT_TEMPLATE.format(iv=text))
    wait = seq_list(prog.processes[0].from_blocks[0][1])[0]
    return wait.interval


@pytest.mark.parametrize("text, lo, hi, lstrict, hstrict", [
    ("[1,2]", 1, 2, False, False),
    ("]1,2]", 1, 2, True, False),
    ("[1,2[", 1, 2, False, True),
    ("]1,2[", 1, 2, True, True),
    ("[0,inf[", 0, None, False, True),
    ("[1/2, 3/2]", Fraction(1, 2), Fraction(3, 2), False, False),
    ("[3;4]", 3, 4, False, False),  # semicolon separator is accepted too
])
def test_interval_brackets(text, lo, hi, lstrict, hstrict):
    iv = parse_wait_interval(text)
    assert iv.lower == lo
    assert iv.upper == hi
    assert iv.lower_strict == lstrict
    assert iv.upper_strict == hstrict


def test_interval_constant_bounds():
    prog = parse_program("const T : nat is 7\n" + WAIT_TEMPLATE.format(iv="[T,T]"))
    wait = seq_list(prog.processes[0].from_blocks[0][1])[0]
    assert wait.interval == TimeInterval(Fraction(7), Fraction(7), False, False)


def test_unbounded_lower_is_rejected():
    with pytest.raises(ParseError):
        parse_wait_interval("[inf,inf[")


@st.composite
def intervals(draw):
    lo = draw(st.fractions(min_value=0, max_value=20, max_denominator=8))
    width = draw(st.fractions(min_value=0, max_value=20, max_denominator=8))
    unbounded = draw(st.booleans())
    hi = None if unbounded else lo + width
    lstrict = draw(st.booleans())
    hstrict = True if unbounded else draw(st.booleans())
    if hi is not None and hi == lo and (lstrict or hstrict):
        lstrict = hstrict = False  # keep the interval nonempty
    return TimeInterval(lo, hi, lstrict, hstrict)


@given(intervals())
@settings(max_examples=60, deadline=None)
def test_interval_print_parse_round_trip(iv):
    assert parse_wait_interval(str(iv)) == iv


# -- expressions (identifiers stay Var nodes at parse time)

def exprs():
    leaves = st.one_of(
        st.integers(min_value=-4, max_value=20).map(IntLit),
        st.booleans().map(BoolLit),
        st.sampled_from(["x", "y", "cnt", "p_on"]).map(Var),
    )
    return st.recursive(
        leaves,
        lambda kids: st.one_of(
            kids.map(Not),
            st.tuples(
                st.sampled_from(["or", "and", "=", "<=", ">=", "<", ">", "+", "-"]),
                kids, kids,
            ).map(lambda t: BinOp(*t)),
        ),
        max_leaves=12,
    )


GUARD_TEMPLATE = """\
process p [a : none] is
  states s0
  from s0 on ({e}); a; to s0
component main is
  port a1 : none in [0,1]
  par * in
    q : p [a1]
  end
"""


@given(exprs())
@settings(max_examples=80, deadline=None)
def test_expression_print_parse_round_trip(e):
    prog = parse_program(GUARD_TEMPLATE.format(e=expr_str(e)))
    on = seq_list(prog.processes[0].from_blocks[0][1])[0]
    assert on.cond == e


def test_operator_precedence_groups_and_before_or():
    prog = parse_program(GUARD_TEMPLATE.format(e="x or y and cnt = 1"))
    on = seq_list(prog.processes[0].from_blocks[0][1])[0]
    assert on.cond == BinOp("or", Var("x"),
                             BinOp("and", Var("y"),
                                   BinOp("=", Var("cnt"), IntLit(1))))


# -- property bodies

def test_property_forms_parse():
    for text in [
        "property a is deadlockfree",
        "property b is unreachable (q/state s1)",
        "property c is resettable (q/state s0)",
        "property d is absent (q/event f)",
        "property e is absent (q/event f) after (q/event e) within ]0,2]",
        "property f is (q/event a) leadsto (q/event b) within [0; 5]",
        "property g is ltl [] ((q/event a) => <> (q/event b))",
    ]:
        decl = parse_property(text)
        assert decl.name in "abcdefg"


# -- errors carry a usable location and expectation set

def test_parse_error_reports_position_and_expectation():
    with pytest.raises(ParseError) as ei:
        parse_program("process p [a : none is\n  states s0\n")
    err = ei.value
    assert err.span.start_line == 1
    assert err.found == "is"
    assert any("]" in e for e in err.expected)
    assert ": expected" in str(err)


def test_empty_input_is_an_empty_program():
    # No declarations is syntactically fine; wellformedness rejects the
    # missing root component later.
    prog = parse_program("")
    assert prog.components == ()
    from tempock.model import check_wellformed
    assert check_wellformed(prog)


def test_keyword_cannot_name_a_state():
    with pytest.raises(ParseError):
        parse_program(WAIT_TEMPLATE.format(iv="[1,2]").replace("states s0", "states from"))
