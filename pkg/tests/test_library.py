"""Verified component library: generators, proof obligations, task specs."""
from fractions import Fraction

import pytest

from tempock.library import (
    InvalidTaskSpec, NotALibraryComponent, TaskSpec, build_tasksystem,
    check_obligations, instantiate_periodic, obligations_for,
    parse_task_table, tasksystem_source,
)
from tempock.model import check_wellformed
from tempock.parser import parse_program
from tempock.tts import compile_program
from tempock.classgraph import build_graph
from tempock.patterns import check_pattern, resolve_pattern


# -- controller generator

def test_generated_controller_is_wellformed_and_small():
    prog = parse_program(instantiate_periodic("periodic", 20))
    assert check_wellformed(prog) == []
    g = build_graph(compile_program(prog))
    assert g.n_classes == 4
    assert not g.dead


def test_generator_scales_to_several_instances():
    prog = parse_program(instantiate_periodic("periodic", 20, n=3))
    assert check_wellformed(prog) == []
    comp = prog.components[0]
    assert [i.label for i in comp.instances] == ["t1", "t2", "t3"]
    assert len(comp.ports) == 12


def test_generator_accepts_rational_periods():
    prog = parse_program(instantiate_periodic("periodic", Fraction(3, 2)))
    assert check_wellformed(prog) == []


@pytest.mark.parametrize("bad", [0, -1, Fraction(-1, 2)])
def test_generator_rejects_nonpositive_periods(bad):
    with pytest.raises(ValueError):
        instantiate_periodic("periodic", bad)


def test_generator_rejects_bad_names():
    with pytest.raises(ValueError):
        instantiate_periodic("not a name", 20)


# -- proof obligations

def test_all_controller_obligations_hold():
    report = check_obligations()
    assert report.all_hold
    assert len(report.results) == 6
    assert {r.oid for r in report.results} == {
        "P0a", "P0b", "P1", "P2", "P3", "P4"}
    for r in report.results:
        assert type(r.verdict).__name__ == "Holds"
        assert r.seconds < 10.0


def test_obligations_for_dispatches_on_shape():
    prog = parse_program(instantiate_periodic("periodic", 20))
    obls = obligations_for(prog, "t")
    assert [o[0] for o in obls] == ["P0a", "P0b", "P1", "P2", "P3", "P4"]


def test_obligations_for_rejects_foreign_processes(corpus):
    with pytest.raises(NotALibraryComponent):
        obligations_for(corpus.program("pingpong.fcr"), "l")


def test_obligations_for_unknown_instance():
    prog = parse_program(instantiate_periodic("periodic", 20))
    with pytest.raises(NotALibraryComponent):
        obligations_for(prog, "ghost")


def test_task_controller_gets_a_miss_obligation():
    tasks = [TaskSpec("solo", 6, 0, 5, 1, 1, 2)]
    prog = build_tasksystem(tasks, "interval")
    obls = obligations_for(prog, "t_solo")
    assert [o[0] for o in obls] == ["nomiss_t_solo"]
    tts = compile_program(prog)
    res = check_pattern(tts, resolve_pattern(prog, obls[0][1].body))
    assert type(res.verdict).__name__ == "Holds"


def test_scheduler_obligations_cover_mutex_and_work_conservation():
    tasks = [TaskSpec("a", 6, 0, 5, 1, 1, 1), TaskSpec("b", 6, 1, 5, 2, 1, 1)]
    prog = build_tasksystem(tasks, "det-wcet")
    obls = obligations_for(prog, "sch")
    ids = [o[0] for o in obls]
    assert "S0" in ids
    assert any(i.startswith("mutex_") for i in ids)
    assert sum(i.startswith("workcons_") for i in ids) == 2
    tts = compile_program(prog)
    for oid, decl in obls:
        res = check_pattern(tts, resolve_pattern(prog, decl.body),
                            max_classes=100_000)
        assert type(res.verdict).__name__ == "Holds", oid


# -- task tables

def test_task_spec_validation():
    TaskSpec("ok", 10, 0, 10, 1, 1, 2)
    with pytest.raises(InvalidTaskSpec):
        TaskSpec("bad period", 0, 0, 1, 1, 1, 1)
    with pytest.raises(InvalidTaskSpec):
        TaskSpec("x", 10, 10, 10, 1, 1, 1)   # offset not below period
    with pytest.raises(InvalidTaskSpec):
        TaskSpec("x", 10, 0, 11, 1, 1, 1)    # deadline past the period
    with pytest.raises(InvalidTaskSpec):
        TaskSpec("x", 10, 0, 5, 1, 3, 2)     # bcet above wcet
    with pytest.raises(InvalidTaskSpec):
        TaskSpec("x", 10, 0, 5, 1, 0, 6)     # wcet past the deadline
    with pytest.raises(InvalidTaskSpec):
        TaskSpec("x", 10, 0, 5, 1, 0, 0)     # no work at all


def test_parse_task_table_round_trip():
    text = """\
# name period offset deadline priority bcet wcet
Task1 20 0 20 1 1 3
Task2 20 3 10 2 2 2

Task3 20 0 20 3 10 10
"""
    tasks = parse_task_table(text)
    assert [t.name for t in tasks] == ["Task1", "Task2", "Task3"]
    assert tasks[1].deadline == 10


@pytest.mark.parametrize("line, hint", [
    ("Task1 20 0 20 1 1", "column"),
    ("Task1 20 0 20 1 1 3 9", "column"),
    ("Task1 twenty 0 20 1 1 3", "integer"),
    ("Task1 20 0 30 1 1 3", "deadline"),
])
def test_parse_task_table_reports_line_errors(line, hint):
    with pytest.raises(InvalidTaskSpec) as ei:
        parse_task_table(line + "\n")
    assert "line 1" in str(ei.value)


def test_parse_task_table_rejects_duplicates_and_empty():
    with pytest.raises(InvalidTaskSpec):
        parse_task_table("")
    with pytest.raises(InvalidTaskSpec):
        parse_task_table("a 10 0 5 1 1 1\na 12 0 5 2 1 1\n")
    with pytest.raises(InvalidTaskSpec):
        parse_task_table("a 10 0 5 1 1 1\nb 12 0 5 1 1 1\n")  # shared priority


# -- emitted task systems

def test_tasksystem_source_round_trips():
    tasks = [TaskSpec("a", 6, 0, 5, 1, 1, 2), TaskSpec("b", 7, 1, 6, 2, 1, 1)]
    for mode in ("det-wcet", "interval"):
        text = tasksystem_source(tasks, mode)
        prog = parse_program(text)
        assert check_wellformed(prog) == []
        labels = [i.label for i in prog.components[0].instances]
        assert labels == ["t_a", "e_a", "t_b", "e_b", "sch"]


def test_et_mode_aliases():
    tasks = [TaskSpec("a", 6, 0, 5, 1, 1, 2)]
    assert tasksystem_source(tasks, "wcet") == tasksystem_source(tasks, "det-wcet")
    with pytest.raises(InvalidTaskSpec):
        tasksystem_source(tasks, "quantum")


def test_det_mode_pins_execution_at_wcet():
    tasks = [TaskSpec("a", 6, 0, 5, 1, 1, 3)]
    det = tasksystem_source(tasks, "det-wcet")
    ivl = tasksystem_source(tasks, "interval")
    assert "[3,3]" in det.replace(" ", "")
    assert "[1,3]" in ivl.replace(" ", "")
