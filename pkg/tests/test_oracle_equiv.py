"""Differential testing: dense abstraction vs the exhaustive grid oracle.

The acceptance suite runs the full hundred-system sweep; this file keeps a
fast slice for everyday runs plus the corner cases that motivated the oracle.
"""
from fractions import Fraction

import pytest

from tempock.classgraph import agreement, build_graph, oracle_explore, random_tts

from conftest import BASE_SEED


SLICE = range(BASE_SEED, BASE_SEED + 25)


@pytest.mark.parametrize("seed", SLICE)
def test_random_system_agrees_at_two_granularities(seed):
    tts = random_tts(seed)
    graph = build_graph(tts, max_classes=200_000)
    assert not graph.limit_hit
    for gr in (Fraction(1), Fraction(1, 2)):
        oracle = oracle_explore(tts, granularity=gr)
        assert agreement(graph, oracle) == [], f"seed {seed} at grid {gr}"


def test_random_systems_are_reproducible():
    a, b = random_tts(7), random_tts(7)
    assert [t.interval for t in a.transitions] == [t.interval for t in b.transitions]
    assert a.initial == b.initial


def test_random_systems_stay_small():
    for seed in SLICE:
        tts = random_tts(seed)
        assert len(tts.transitions) <= 4
        for t in tts.transitions:
            assert t.interval.lower <= 4
            assert t.interval.upper is None or t.interval.upper <= 4


def test_agreement_reports_differences_not_just_booleans(corpus):
    # feeding the wrong oracle in must produce a readable diff, not a crash
    g = corpus.graph("pingpong.fcr")
    o = oracle_explore(corpus.tts("deadlock.fcr"))
    diffs = agreement(g, o)
    assert diffs and any("differ" in d for d in diffs)


def test_agreement_flags_incomplete_graphs(corpus):
    tts = corpus.tts("chain3.fcr")
    g = build_graph(tts, max_classes=2)
    o = oracle_explore(tts)
    diffs = agreement(g, o)
    assert diffs and "incomplete" in diffs[0]
