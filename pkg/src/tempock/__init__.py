"""Verification toolchain for a timed concurrent specification language.

Pipeline: parse (.fcr) -> well-formed AST -> timed transition system ->
state-class graph (dense-time abstraction) -> realtime patterns via timed
observers / SE-LTL via Buchi products -> verdicts with timed counterexamples.
A discrete-time oracle validates the dense-time construction independently.
A library of verified periodic-task templates sits on top, with proof
obligations and non-preemptive fixed-priority schedulability analysis.
"""

from tempock.model import (
    Program,
    check_wellformed,
    resolve_observable,
)
from tempock.parser import (
    ParseError,
    UnboundIntervalSymbol,
    parse_program,
    parse_property,
    pretty_print,
)
from tempock.tts import CompileError, compile_program
from tempock.classgraph import build_graph, oracle_explore, validate_run
from tempock.patterns import check_pattern, resolve_pattern
from tempock.library import (
    InvalidTaskSpec,
    NotALibraryComponent,
    TaskSpec,
    build_tasksystem,
    check_obligations,
    check_schedulable,
    instantiate_periodic,
    obligations_for,
    parse_task_table,
    tasksystem_source,
)

__all__ = [
    "Program",
    "check_wellformed",
    "resolve_observable",
    "ParseError",
    "UnboundIntervalSymbol",
    "parse_program",
    "parse_property",
    "pretty_print",
    "CompileError",
    "compile_program",
    "build_graph",
    "oracle_explore",
    "validate_run",
    "check_pattern",
    "resolve_pattern",
    "InvalidTaskSpec",
    "NotALibraryComponent",
    "TaskSpec",
    "build_tasksystem",
    "check_obligations",
    "check_schedulable",
    "instantiate_periodic",
    "obligations_for",
    "parse_task_table",
    "tasksystem_source",
]
