"""Compilation to transition systems: chunking, timing, dominance."""
from fractions import Fraction

import pytest

from tempock.model import DEFAULT_INTERVAL, TimeInterval, EventAtom, StateAtom
from tempock.parser import parse_program
from tempock.tts import CompileError, compile_program

from conftest import load_program


def compile_text(text: str):
    return compile_program(parse_program(text))


TEMPLATE = """\
process p [a : none, b : none] is
  states s0, s1
  var x : 0..3 := 0
  from s0 {body0}
  from s1 {body1}
component main is
  port a1 : none in {ia}
  port b1 : none in {ib}
{extra}  par * in
    q : p [a1, b1]
  end
"""


def make(body0, body1="wait [1,1]; to s0", ia="[0,2]", ib="[1,1]", extra=""):
    return compile_text(TEMPLATE.format(
        body0=body0, body1=body1, ia=ia, ib=ib, extra=extra))


def by_event(tts, ev):
    return [t for t in tts.transitions if t.event == ev]


# -- chunking

def test_guard_sync_update_make_one_transition():
    tts = make("on (x = 0); a; x := 1; to s1")
    assert len(by_event(tts, "a1")) == 1
    (t,) = by_event(tts, "a1")
    st = tts.fire(tts.initial, t.tid)[0]
    assert st[tts.inst_var_slots[0]["x"]] == 1
    assert st[0] == tts.loc_index[0]["s1"]


def test_update_before_sync_splits_the_chunk():
    tts = make("x := 1; a; to s1")
    s0 = tts.loc_index[0]["s0"]
    internal = [t for t in tts.transitions
                if t.event is None and t.parts[0][1] == s0]
    assert len(internal) == 1
    # the detached update edge is lazy: it may fire at any time
    assert internal[0].interval == DEFAULT_INTERVAL


def test_updates_compose_left_to_right_in_one_chunk():
    tts = make("a; x := x + 1; x := x + x; to s1")
    (t,) = by_event(tts, "a1")
    st = tts.fire(tts.initial, t.tid)[0]
    assert st[tts.inst_var_slots[0]["x"]] == 2


def test_conditional_terminal_to_duplicates_the_rest():
    tts = make("a; if x = 0 then to s1 end; x := 2; to s0")
    arms = by_event(tts, "a1")
    assert len(arms) == 2
    outcomes = {tts.fire(tts.initial, t.tid)[0]
                for t in arms if t.guard(tts.initial)}
    # x = 0 initially, so only the then-arm is enabled
    assert {st[0] for st in outcomes} == {tts.loc_index[0]["s1"]}


# -- timing

def test_wait_intersects_the_port_interval():
    tts = make("wait [1,2]; a; to s1", ia="[0,3]")
    (t,) = by_event(tts, "a1")
    assert t.interval == TimeInterval(1, 2)


def test_empty_wait_port_intersection_is_rejected():
    with pytest.raises(CompileError, match="empty time interval"):
        make("wait [1,2]; a; to s1", ia="[3,5]")


def test_internal_edge_without_wait_is_lazy():
    tts = make("x := 1; to s1")
    internal = [t for t in tts.transitions if t.event is None
                and t.parts[0][1] == tts.loc_index[0]["s0"]]
    assert internal and internal[0].interval == DEFAULT_INTERVAL


def test_wait_alone_gives_a_timed_internal_edge():
    tts = make("wait [2,5]; to s1")
    internal = [t for t in tts.transitions if t.event is None
                and t.parts[0][1] == tts.loc_index[0]["s0"]]
    assert internal[0].interval == TimeInterval(2, 5)


# -- dominance

def test_unless_branch_dominates_plain_branches():
    tts = make("select\n      a; to s1\n    unless\n      b; to s1\n    end")
    (ta,) = by_event(tts, "a1")
    (tb,) = by_event(tts, "b1")
    assert (tts.dominators[ta.tid] >> tb.tid) & 1
    assert not (tts.dominators[tb.tid] >> ta.tid) & 1


def test_priority_declaration_builds_dominators():
    tts = make("select\n      a; to s1\n    []\n      b; to s1\n    end",
               extra="  priority b1 > a1\n")
    (ta,) = by_event(tts, "a1")
    (tb,) = by_event(tts, "b1")
    assert (tts.dominators[ta.tid] >> tb.tid) & 1


def test_priority_chains_close_transitively():
    tts = compile_program(load_program("periodic20.fcr"))
    c = by_event(tts, "c1")
    d = by_event(tts, "d1")
    dl = by_event(tts, "dl1")
    assert c and d and dl
    # c1 > dl1 > d1 closes to c1 > d1
    for td in d:
        assert any((tts.dominators[td.tid] >> tc.tid) & 1 for tc in c)


def test_dominators_must_have_point_intervals():
    with pytest.raises(CompileError, match="point interval"):
        make("select\n      a; to s1\n    []\n      b; to s1\n    end",
             ib="[1,2]", extra="  priority b1 > a1\n")


# -- observation plumbing

def test_event_tids_and_state_pred_on_a_corpus_model():
    tts = compile_program(load_program("pingpong.fcr"))
    a_tids = tts.event_tids(EventAtom(1, "a"))
    assert a_tids
    for tid in a_tids:
        assert tts.transitions[tid].event is not None
    pred = tts.state_pred(StateAtom(1, "s0"))
    assert pred(tts.initial)
    assert "l:s0" in tts.state_summary(tts.initial)


def test_rendezvous_moves_both_participants():
    tts = compile_program(load_program("pingpong.fcr"))
    (tid,) = tts.event_tids(EventAtom(1, "a"))
    st = tts.fire(tts.initial, tid)[0]
    assert st[0] != tts.initial[0] and st[1] != tts.initial[1]


def test_enabled_ids_respect_guards():
    tts = make("on (x = 3); a; to s1")
    assert all(tts.transitions[t].event is None
               for t in tts.enabled_ids(tts.initial))


def test_unknown_port_argument_is_a_compile_error():
    bad = TEMPLATE.format(body0="a; to s1", body1="b; to s0",
                          ia="[0,1]", ib="[0,1]", extra="")
    bad = bad.replace("q : p [a1, b1]", "q : p [a1, zz]")
    with pytest.raises(CompileError):
        compile_text(bad)
