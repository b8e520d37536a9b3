"""AST invariants: intervals, typing, wellformedness diagnostics."""
from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from tempock.model import (
    Diagnostic, EnumType, IntRange, TimeInterval, check_wellformed,
    resolve_observable, type_domain,
)
from tempock.parser import parse_program

from conftest import load_program


# -- intervals

def test_interval_contains_respects_strictness():
    iv = TimeInterval(1, 3, lower_strict=True, upper_strict=False)
    assert not iv.contains(Fraction(1))
    assert iv.contains(Fraction(3, 2))
    assert iv.contains(Fraction(3))
    assert not iv.contains(Fraction(4))


def test_interval_unbounded_upper_is_open():
    iv = TimeInterval(2, None)
    assert iv.upper_strict
    assert iv.contains(Fraction(10**9))


@pytest.mark.parametrize("lo, hi, ls, hs", [
    (3, 2, False, False),   # inverted bounds
    (2, 2, True, False),    # half-open point
    (2, 2, False, True),
    (-1, 2, False, False),  # negative lower bound
])
def test_interval_rejects_degenerate_bounds(lo, hi, ls, hs):
    with pytest.raises(ValueError):
        TimeInterval(lo, hi, ls, hs)


@given(st.fractions(min_value=0, max_value=10, max_denominator=6),
       st.fractions(min_value=0, max_value=10, max_denominator=6))
@settings(max_examples=50, deadline=None)
def test_interval_contains_endpoint_iff_closed(a, b):
    lo, hi = min(a, b), max(a, b)
    if lo == hi:
        iv = TimeInterval(lo, hi)
        assert iv.contains(lo)
    else:
        closed = TimeInterval(lo, hi, False, False)
        open_ = TimeInterval(lo, hi, True, True)
        assert closed.contains(lo) and closed.contains(hi)
        assert not open_.contains(lo) and not open_.contains(hi)
        assert open_.contains((lo + hi) / 2)


# -- data types

def test_type_domain_enumerations():
    assert type_domain(IntRange(0, 3)) == (0, 1, 2, 3)
    assert type_domain(EnumType("ab", ("a", "b"))) == ("a", "b")


# -- wellformedness

def diags_of(text: str) -> list[str]:
    return [str(d) for d in check_wellformed(parse_program(text))]


GOOD = """\
process p [a : none] is
  states s0
  from s0 a; to s0
component main is
  port a1 : none in [0,1]
  par * in
    q : p [a1]
  end
"""


def test_good_program_has_no_diagnostics():
    assert diags_of(GOOD) == []


def test_diagnostic_str_is_loc_colon_message():
    assert str(Diagnostic("component main", "boom")) == "component main: boom"


def test_missing_root_component():
    ds = diags_of("process p [a : none] is\n  states s0\n  from s0 a; to s0\n")
    assert any("missing root component" in d for d in ds)


def test_duplicate_declaration_names():
    ds = diags_of(GOOD + GOOD.split("component")[0].replace("states s0", "states s0"))
    assert any("duplicate process name p" in d for d in ds)


def test_from_block_for_undeclared_state():
    ds = diags_of(GOOD.replace("from s0 a; to s0", "from s1 a; to s0"))
    assert any("undeclared state s1" in d for d in ds)


def test_to_targets_undeclared_state():
    ds = diags_of(GOOD.replace("to s0", "to nowhere"))
    assert any("to targets undeclared state nowhere" in d for d in ds)


def test_path_must_end_in_to_or_loop():
    ds = diags_of(GOOD.replace("a; to s0", "a"))
    assert any("does not end in to/loop" in d for d in ds)


def test_unreachable_after_to():
    ds = diags_of(GOOD.replace("a; to s0", "to s0; a; to s0"))
    assert any("unreachable statements" in d for d in ds)


def test_select_only_at_block_top():
    nested = GOOD.replace(
        "from s0 a; to s0",
        "from s0 if true then select a; to s0 end end; to s0")
    assert any("select is only allowed" in d for d in diags_of(nested))


def test_sync_on_undeclared_port():
    ds = diags_of(GOOD.replace("from s0 a; to s0", "from s0 b; to s0"))
    assert any("sync on undeclared port b" in d for d in ds)


def test_non_boolean_condition():
    ds = diags_of(GOOD.replace("from s0 a; to s0", "from s0 on (1 + 2); a; to s0"))
    assert any("condition is not boolean" in d for d in ds)


ASSIGN = """\
process p [a : none] is
  states s0
  var x : 0..3 := 0
  from s0 a; x := {rhs}; to s0
component main is
  port a1 : none in [0,1]
  par * in
    q : p [a1]
  end
"""


def test_well_typed_assignment_passes():
    assert diags_of(ASSIGN.format(rhs="x + 1")) == []


def test_ill_typed_assignment():
    ds = diags_of(ASSIGN.format(rhs="true"))
    assert any("ill-typed assignment to x" in d for d in ds)


def test_assignment_to_undeclared_variable():
    ds = diags_of(ASSIGN.format(rhs="1").replace("x :=", "y :="))
    assert any("undeclared variable y" in d for d in ds)


def test_component_port_arity_mismatch():
    ds = diags_of(GOOD.replace("q : p [a1]", "q : p [a1, a1]"))
    assert any("expected 1 port arguments, got 2" in d for d in ds)


def test_component_unknown_process():
    ds = diags_of(GOOD.replace("q : p [a1]", "q : ghost [a1]"))
    assert any("unknown process ghost" in d for d in ds)


def test_component_undeclared_port_argument():
    ds = diags_of(GOOD.replace("q : p [a1]", "q : p [zz]"))
    assert any("port argument zz is not a declared port" in d for d in ds)


def test_priority_undeclared_port_and_cycle():
    text = GOOD.replace("par * in", "priority a1 > a1\n  par * in")
    ds = diags_of(text)
    assert any("priority cycle" in d for d in ds)
    text2 = GOOD.replace("par * in", "priority a1 > b9\n  par * in")
    assert any("undeclared port b9" in d for d in diags_of(text2))


# -- observable resolution on a real corpus model

def test_resolve_observable_by_label_and_index():
    prog = load_program("pingpong.fcr")
    decl = prog.properties[0]
    # resolved atoms use the 1-based instance index
    from tempock.model import ObservablePath
    a1 = resolve_observable(prog, ObservablePath(("l",), "state", "s0"))
    a2 = resolve_observable(prog, ObservablePath((1,), "state", "s0"))
    assert a1 == a2
    assert a1.instance == 1


def test_resolve_observable_rejects_unknowns():
    prog = load_program("pingpong.fcr")
    from tempock.model import ObservablePath, UnknownInstance, UnknownState
    with pytest.raises(UnknownInstance):
        resolve_observable(prog, ObservablePath(("ghost",), "state", "s0"))
    with pytest.raises(UnknownState):
        resolve_observable(prog, ObservablePath(("l",), "state", "zz"))
