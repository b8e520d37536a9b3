"""Dense-time abstraction: bound encoding, canonical domains, exploration."""
from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from tempock.classgraph import (
    INF_ENC, build_graph, compute_scale, enc, enc_add, enc_strict, enc_value,
    floyd_warshall, initial_class, oracle_explore, validate_run,
)
from tempock.parser import parse_program
from tempock.tts import compile_program

from conftest import CORPUS_CLASSES, corpus_names, load_program


# -- bound encoding

@given(st.integers(min_value=-1000, max_value=1000), st.booleans())
def test_enc_round_trip(v, strict):
    e = enc(v, strict)
    assert enc_value(e) == v
    assert enc_strict(e) is strict


@given(st.integers(min_value=-100, max_value=100), st.booleans(),
       st.integers(min_value=-100, max_value=100), st.booleans())
def test_enc_orders_strict_below_weak(a, sa, b, sb):
    # (v, strict) is a tighter bound than (v, weak); larger values dominate
    assert (enc(a, sa) < enc(b, sb)) == ((a, not sa) < (b, not sb))


@given(st.integers(min_value=-50, max_value=50), st.booleans(),
       st.integers(min_value=-50, max_value=50), st.booleans())
def test_enc_add_is_interval_addition(a, sa, b, sb):
    e = enc_add(enc(a, sa), enc(b, sb))
    assert enc_value(e) == a + b
    assert enc_strict(e) == (sa or sb)


def test_enc_add_saturates_at_infinity():
    assert enc_add(INF_ENC, enc(3, False)) >= INF_ENC
    assert enc_add(enc(-5, True), INF_ENC) >= INF_ENC


# -- canonical forms

@st.composite
def dbms(draw):
    m = draw(st.integers(min_value=2, max_value=4))
    D = []
    for i in range(m):
        for j in range(m):
            if i == j:
                D.append(enc(0, False))
            elif draw(st.booleans()):
                D.append(INF_ENC)
            else:
                D.append(enc(draw(st.integers(min_value=-6, max_value=6)),
                             draw(st.booleans())))
    return D, m


@given(dbms())
@settings(max_examples=150, deadline=None)
def test_floyd_warshall_canonical_and_tightening(dm):
    D, m = dm
    out = floyd_warshall(list(D), m)
    if out is None:
        return
    # canonical: a second pass changes nothing
    assert floyd_warshall(list(out), m) == out
    # tightening: no entry ever grows
    assert all(o <= d for o, d in zip(out, D))
    # consistent: nonnegative diagonal
    assert all(out[i * m + i] >= enc(0, False) for i in range(m))


def test_floyd_warshall_detects_emptiness():
    # x - y <= -1 and y - x <= 0 has no solution
    D = [enc(0, False), enc(-1, False),
         enc(0, False), enc(0, False)]
    assert floyd_warshall(D, 2) is None


# -- scale

def test_scale_clears_rational_bounds():
    tts = compile_program(load_program("openrat.fcr"))
    assert compute_scale(tts) == 4
    tts2 = compile_program(load_program("pingpong.fcr"))
    assert compute_scale(tts2) == 1


def test_initial_class_domain_is_consistent():
    tts = compile_program(load_program("pingpong.fcr"))
    state, en, D = initial_class(tts)
    assert state == tts.initial
    n = len(en) + 1
    assert len(D) == n * n
    assert all(D[i * n + i] == enc(0, False) for i in range(n))


# -- exploration

@pytest.mark.parametrize("name", corpus_names())
def test_corpus_class_counts_are_frozen(name, corpus):
    assert corpus.graph(name).n_classes == CORPUS_CLASSES[name]


def test_exploration_is_deterministic():
    tts = compile_program(load_program("chain3.fcr"))
    d1 = build_graph(tts).dump()
    d2 = build_graph(tts).dump()
    assert d1 == d2


def test_thread_count_does_not_change_the_graph():
    tts = compile_program(load_program("chain3.fcr"))
    g1 = build_graph(tts, threads=1)
    g2 = build_graph(tts, threads=2)
    assert g1.n_classes == g2.n_classes
    assert g1.edge_triples() == g2.edge_triples()


def test_max_classes_stops_exploration():
    tts = compile_program(load_program("chain3.fcr"))
    g = build_graph(tts, max_classes=2)
    assert g.limit_hit


def test_dead_classes_match_terminal_states(corpus):
    g = corpus.graph("deadlock.fcr")
    assert g.dead
    assert not corpus.graph("pingpong.fcr").dead


def test_class_summary_and_domain_text(corpus):
    g = corpus.graph("pingpong.fcr")
    assert "s0" in g.class_summary(g.initial)
    assert "a1:[1,2]" in g.domain_text(g.initial)
    stats = g.stats()
    assert stats["classes"] == g.n_classes
    assert stats["limit"] is None


# -- grid oracle

def test_oracle_agrees_on_integer_model(corpus):
    tts = corpus.tts("chain3.fcr")
    for gr in (Fraction(1), Fraction(1, 2)):
        o = oracle_explore(tts, granularity=gr)
        from tempock.classgraph import agreement
        assert agreement(corpus.graph("chain3.fcr"), o) == []


def test_oracle_refines_past_a_coarse_grid(corpus):
    # starting grid 1 misses the ]0,2[ and half-unit windows; the oracle
    # must refine on its own and still agree
    tts = corpus.tts("race.fcr")
    o = oracle_explore(tts, granularity=Fraction(1))
    assert o.granularity <= Fraction(1, 2)
    from tempock.classgraph import agreement
    assert agreement(corpus.graph("race.fcr"), o) == []


def test_oracle_respects_config_budget(corpus):
    from tempock.classgraph import HorizonExceeded
    with pytest.raises(HorizonExceeded):
        oracle_explore(corpus.tts("chain3.fcr"), max_configs=3)


# -- exact run validation

def _tid(tts, inst, port):
    from tempock.model import EventAtom
    return next(iter(tts.event_tids(EventAtom(inst, port))))


def test_validate_run_accepts_a_real_schedule(corpus):
    tts = corpus.tts("pingpong.fcr")
    a, b = _tid(tts, 1, "a"), _tid(tts, 1, "b")
    # a in [1,2] then b in [0,1] after it
    assert validate_run(tts, [(a, Fraction(1), None), (b, Fraction(1), None)]) is None
    assert validate_run(tts, [(a, Fraction(2), None), (b, Fraction(3), None)]) is None


def test_validate_run_rejects_out_of_window_firing(corpus):
    tts = corpus.tts("pingpong.fcr")
    msg = validate_run(tts, [(_tid(tts, 1, "a"), Fraction(5), None)])
    assert msg is not None and "outside" in msg


def test_validate_run_rejects_overshooting_a_deadline(corpus):
    # race: a (window ]0,2[) and b ([1,3]) are enabled together; firing b at
    # 5/2 would require waiting past a's upper bound
    tts = corpus.tts("race.fcr")
    msg = validate_run(tts, [(_tid(tts, 1, "b"), Fraction(5, 2), None)])
    assert msg is not None and "past its deadline" in msg


def test_validate_run_rejects_dominated_firing(corpus):
    # selectprio: a is a point event with priority over b, so firing b at an
    # instant where a is firable must be refused
    tts = corpus.tts("selectprio.fcr")
    msg = validate_run(tts, [(_tid(tts, 1, "b"), Fraction(0), None)])
    assert msg is not None and "has priority" in msg


def test_validate_run_rejects_time_reversal(corpus):
    tts = corpus.tts("pingpong.fcr")
    a, b = _tid(tts, 1, "a"), _tid(tts, 1, "b")
    msg = validate_run(tts, [(a, Fraction(2), None), (b, Fraction(1), None)])
    assert msg is not None and "time decreases" in msg
