"""Shared fixtures: corpus loading, compiled-model caches, frozen verdicts.

Set TEMPOCK_SEED to shift the randomized suites; the default keeps every
run byte-identical.
"""
import os
from pathlib import Path

import pytest

from tempock.model import check_wellformed
from tempock.parser import parse_program
from tempock.tts import compile_program
from tempock.classgraph import build_graph
from tempock.patterns import check_pattern, resolve_pattern

CORPUS_DIR = Path(__file__).parent / "corpus"

BASE_SEED = int(os.environ.get("TEMPOCK_SEED", "0"))

# Expected verdict per corpus property, frozen from hand-derived timelines.
# `Violated` entries double as counterexample-replay material.
CORPUS_VERDICTS = {
    "chain3.fcr": {"alive": "Holds", "latency": "Violated", "drains": "Holds"},
    "counter.fcr": {"alive": "Holds", "in_range": "Holds", "wraps": "Holds",
                    "climbs": "Holds"},
    "deadlock.fcr": {"alive": "Violated", "never_done": "Violated",
                     "home": "Violated", "single_shot": "Holds"},
    "openrat.fcr": {"alive": "Holds", "echo": "Holds", "strict_gap": "Holds",
                    "home": "Holds"},
    "periodic1.fcr": {"P2": "Holds", "P3": "Holds", "alive": "Holds"},
    "periodic20.fcr": {"req2": "Holds", "req3": "Holds", "req4": "Holds",
                       "P4": "Holds", "no_error_state": "Holds",
                       "home": "Holds"},
    "pingpong.fcr": {"alive": "Holds", "bounce": "Holds",
                     "synced": "Violated", "home": "Holds"},
    "race.fcr": {"alive": "Holds", "b_wins_sometimes": "Violated",
                 "quick_return": "Holds", "slow_side": "Holds"},
    "selectprio.fcr": {"alive": "Holds", "starved": "Holds", "beat": "Holds",
                       "home": "Holds"},
    "solotask.fcr": {"nomiss": "Holds", "alive": "Holds", "served": "Holds",
                     "busy_again": "Holds"},
    "toggle.fcr": {"alive": "Holds", "off_again": "Holds",
                   "never_on": "Violated", "beat": "Holds"},
    "urgentseal.fcr": {"alive": "Holds", "too_close": "Violated",
                       "clear_open": "Holds", "home": "Holds"},
}

# Class counts of the bare state-class graphs, frozen alongside the verdicts.
CORPUS_CLASSES = {
    "chain3.fcr": 13, "counter.fcr": 3, "deadlock.fcr": 2, "openrat.fcr": 2,
    "periodic1.fcr": 4, "periodic20.fcr": 4, "pingpong.fcr": 2,
    "race.fcr": 3, "selectprio.fcr": 2, "solotask.fcr": 7, "toggle.fcr": 2,
    "urgentseal.fcr": 2,
}


def corpus_names() -> list[str]:
    return sorted(p.name for p in CORPUS_DIR.glob("*.fcr"))


def load_program(name: str):
    text = (CORPUS_DIR / name).read_text()
    prog = parse_program(text, filename=name)
    diags = check_wellformed(prog)
    assert not diags, [str(d) for d in diags]
    return prog


class _Corpus:
    """Lazily parsed/compiled/explored corpus, shared across the session."""

    def __init__(self):
        self._progs = {}
        self._tts = {}
        self._graphs = {}

    def program(self, name):
        if name not in self._progs:
            self._progs[name] = load_program(name)
        return self._progs[name]

    def tts(self, name):
        if name not in self._tts:
            self._tts[name] = compile_program(self.program(name))
        return self._tts[name]

    def graph(self, name):
        if name not in self._graphs:
            g = build_graph(self.tts(name), max_classes=100_000)
            assert not g.limit_hit
            self._graphs[name] = g
        return self._graphs[name]

    def check(self, name, prop_name, **kw):
        prog = self.program(name)
        decl = next(p for p in prog.properties if p.name == prop_name)
        pattern = resolve_pattern(prog, decl.body)
        kw.setdefault("max_classes", 100_000)
        return check_pattern(self.tts(name), pattern,
                             graph=self._graphs.get(name), **kw)


@pytest.fixture(scope="session")
def corpus():
    return _Corpus()
