"""Verified component templates for periodic real-time tasks.

Two generators emit source text in the modeling language and a checker runs
the standard queries on the result:

* ``instantiate_periodic`` reproduces the periodic thread controller: a
  process cycling through dispatch ``d``, completion ``c``, deadline ``dl``
  and period tick ``w`` events around a shared status variable, entering a
  ``sched_error`` sink when a period elapses without completion.  Every
  instance carries six proof obligations (P0a, P0b, P1, P2, P3, P4) that are
  model checked, not assumed.

* ``build_tasksystem`` composes, per task, a deadline-aware controller and an
  executor with the task's compute interval, plus one non-preemptive
  fixed-priority scheduler process.  ``check_schedulable`` then decides
  schedulability as unreachability of every controller's ``sched_error``
  state and reports the first missed deadline as a timed trace.

Both generators return plain source text so their output can be inspected,
pretty-printed, or fed back through the parser; ``build_tasksystem`` parses
its own emission and returns the resulting program.
"""

from __future__ import annotations

import re
import time
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional, Union

from . import model
from .model import Program, PropertyDecl, StateAtom
from .parser import parse_program, parse_property
from .tts import compile_program
from .patterns import (CheckResult, Unreachable, check_pattern, resolve_pattern)
from .ltl import Counterexample, Holds, Verdict, Violated


class NotALibraryComponent(Exception):
    """The instance does not refer to a process emitted by this library."""


class InvalidTaskSpec(Exception):
    pass


# ---------------------------------------------------------------------------
# Periodic thread controller
# ---------------------------------------------------------------------------

_CONTROLLER = """\
process {proc} [d : none, c : none, dl : none, w : none] (&st : pstate) is
  states s0, sched_error
  from s0
    select
      on (st = p_idle); c; st := p_rdy; loop
    []
      w; dl;
      if st = p_idle then st := p_err end;
      d;
      if st = p_rdy then st := p_idle end;
      loop
    unless
      on (st = p_err); wait [0,0]; to sched_error
    end"""


def _frac(v: Union[int, Fraction]) -> str:
    f = Fraction(v)
    return str(f.numerator) if f.denominator == 1 else f"{f.numerator}/{f.denominator}"


def instantiate_periodic(name: str, T: Union[int, Fraction], n: int = 1) -> str:
    """Emit a complete program with `n` periodic controller instances of
    period T.  With n=1 the single instance is labeled `t`; otherwise the
    labels are t1..tn, each with its own ports and status variable."""
    if not re.fullmatch(r"[A-Za-z_][A-Za-z0-9_]*", name):
        raise ValueError(f"not a valid process name: {name!r}")
    if Fraction(T) <= 0:
        raise ValueError(f"period must be positive, got {T}")
    if n < 1:
        raise ValueError(f"instance count must be positive, got {n}")

    # An integral period goes through a named constant so the emitted text
    # matches the hand-written model; rational periods are inlined.
    integral = Fraction(T).denominator == 1
    tick = "T" if integral else _frac(T)
    parts = []
    if integral:
        parts.append(f"const T : nat is {Fraction(T).numerator}")
    parts.append("type pstate is union p_idle | p_rdy | p_err end")
    parts.append(_CONTROLLER.format(proc=name))

    body = []
    for i in range(1, n + 1):
        body += [
            f"  port d{i} : none in [0,0]",
            f"  port c{i} : none in [0,0]",
            f"  port dl{i} : none in [0,0]",
            f"  port w{i} : none in [{tick},{tick}]",
        ]
    for i in range(1, n + 1):
        body.append(f"  var st{i} : pstate := p_idle")
    for i in range(1, n + 1):
        body.append(f"  priority c{i} > dl{i} > d{i}")
    body.append("  par * in")
    insts = []
    for i in range(1, n + 1):
        lbl = "t" if n == 1 else f"t{i}"
        insts.append(f"    {lbl} : {name} [d{i}, c{i}, dl{i}, w{i}] (&st{i})")
    body.append("\n    ||".join(insts).replace("\n    ||    ", "\n    || "))
    body.append("  end")
    parts.append("component main is\n" + "\n".join(body))
    return "\n\n".join(parts) + "\n"


# ---------------------------------------------------------------------------
# Proof obligations
# ---------------------------------------------------------------------------

# The six controller obligations.  P0a/P0b characterize sched_error entry in
# both directions, P1 ties completion to the status variable, P2/P3 assert
# dispatch periodicity (checked on a period-1 instance, which is enough since
# only the event order at the period boundary matters), and P4 pins the
# dispatch to the deadline instant.
_CONTROLLER_OBLIGATIONS = (
    ("P0a", "ltl [] (({t}/event d and ((not {t}/event c) until {t}/event dl))"
            " => <> {t}/state sched_error)"),
    ("P0b", "ltl (([] (({t}/event d => ((not {t}/event dl) until {t}/event c))))"
            " => [] (not ({t}/state sched_error)))"),
    ("P1", "{t}/event c leadsto (({t}/value (st=p_rdy)) or {t}/state sched_error)"
           " within [0,0]"),
    ("P2", "({t}/event dl leadsto ({t}/event dl or {t}/state sched_error)"
           " within [{T},{T}])"),
    ("P3", "({t}/event dl or {t}/start) leadsto ({t}/event dl or {t}/state"
           " sched_error) within [{T},{T}]"),
    ("P4", "{t}/event dl leadsto {t}/event d within [0,0]"),
)

# Obligations for a scheduler instance inside a task system: it never
# deadlocks, never lets two executors compute at once, and grants the idle
# CPU to a ready task.
_SCHED_OBLIGATIONS = (
    ("S0", "deadlockfree"),
    ("mutex_{a}_{b}", "ltl [] (not (({ea}/state run) and ({eb}/state run)))"),
    ("workcons_{a}", "ltl [] ((({s}/state free) and ({ea}/state rdy))"
                     " => (<> (not ({s}/state free))))"),
)


def _find_instance(program: Program, instance: Union[str, int]) -> model.Instance:
    comp = program.root_component()
    want = str(instance)
    for idx, inst in enumerate(comp.instances, start=1):
        if inst.label == want or str(idx) == want:
            return inst
    raise NotALibraryComponent(f"no instance {instance!r} in component {comp.name}")


def _period_of(program: Program, inst: model.Instance) -> Fraction:
    """Period of a controller instance, read off its tick port's interval."""
    comp = program.root_component()
    ports = {p.name: p for p in comp.ports}
    tick = ports[inst.port_args[3]]
    assert tick.interval is not None
    return tick.interval.lower


def obligations_for(program: Program,
                    instance: Union[str, int] = "t") -> list[tuple[str, PropertyDecl]]:
    """The proof obligations attached to one library instance, as parsed
    property declarations ready for resolve_pattern/check_pattern."""
    inst = _find_instance(program, instance)
    proc = program.process(inst.target)
    if proc is None:
        raise NotALibraryComponent(f"unknown process {inst.target!r}")
    label = inst.label or str(instance)

    if list(proc.states) == ["s0", "sched_error"] and len(proc.port_params) == 4:
        T = _frac(_period_of(program, inst))
        out = []
        for oid, tmpl in _CONTROLLER_OBLIGATIONS:
            text = tmpl.format(t=label, T=T)
            out.append((oid, parse_property(f"property {oid} is {text}",
                                            consts=program)))
        return out

    if proc.states and proc.states[0] == "free":
        return _scheduler_obligations(program, label)

    if "sched_error" in proc.states and "win" in proc.states:
        text = f"absent ({label}/state sched_error)"
        return [(f"nomiss_{label}",
                 parse_property(f"property nomiss is {text}", consts=program))]

    raise NotALibraryComponent(
        f"instance {label!r} ({inst.target}) is not a library template")


def _scheduler_obligations(program: Program, sched_label: str):
    comp = program.root_component()
    execs = [inst.label for inst in comp.instances
             if (p := program.process(inst.target)) is not None
             and list(p.states[:2]) == ["e0", "rdy"]]
    out = []
    out.append(("S0", parse_property("property S0 is deadlockfree")))
    mutex_tmpl = _SCHED_OBLIGATIONS[1][1]
    for i, ea in enumerate(execs):
        for eb in execs[i + 1:]:
            oid = f"mutex_{ea}_{eb}"
            text = mutex_tmpl.format(ea=ea, eb=eb)
            out.append((oid, parse_property(f"property m is {text}",
                                            consts=program)))
    wc_tmpl = _SCHED_OBLIGATIONS[2][1]
    for ea in execs:
        oid = f"workcons_{ea}"
        text = wc_tmpl.format(s=sched_label, ea=ea)
        out.append((oid, parse_property(f"property w is {text}", consts=program)))
    return out


@dataclass(frozen=True)
class ObligationResult:
    instance: str
    oid: str
    verdict: Verdict
    seconds: float
    classes: int


@dataclass(frozen=True)
class ObligationReport:
    results: tuple[ObligationResult, ...]

    @property
    def all_hold(self) -> bool:
        return all(isinstance(r.verdict, Holds) for r in self.results)

    def verdict(self, instance: str, oid: str) -> Verdict:
        for r in self.results:
            if r.instance == instance and r.oid == oid:
                return r.verdict
        raise KeyError((instance, oid))


def check_obligations(program: Optional[Program] = None, *,
                      name: str = "periodic", T: Union[int, Fraction] = 20,
                      max_classes: int = 500_000) -> ObligationReport:
    """Model check every obligation of every library instance.

    Dispatch periodicity (P2/P3) is insensitive to the period value, so those
    two run on a canonical period-1 instance; the rest run on the given
    program (or a fresh single-instance one)."""
    if program is None:
        program = parse_program(instantiate_periodic(name, T), filename="<library>")
    tts = compile_program(program)
    unit_prog = None
    unit_tts = None

    results = []
    comp = program.root_component()
    for idx, inst in enumerate(comp.instances, start=1):
        label = inst.label or str(idx)
        try:
            obls = obligations_for(program, label)
        except NotALibraryComponent:
            continue
        for oid, decl in obls:
            run_prog, run_tts = program, tts
            if oid in ("P2", "P3"):
                if unit_prog is None:
                    unit_prog = parse_program(instantiate_periodic(inst.target, 1),
                                              filename="<library-T1>")
                    unit_tts = compile_program(unit_prog)
                run_prog, run_tts = unit_prog, unit_tts
                decl = dict(obligations_for(run_prog, "t"))[oid]
            t0 = time.perf_counter()
            res = check_pattern(run_tts, resolve_pattern(run_prog, decl.body),
                                max_classes=max_classes)
            results.append(ObligationResult(
                instance=label, oid=oid, verdict=res.verdict,
                seconds=time.perf_counter() - t0, classes=res.graph.n_classes))
    if not results:
        raise NotALibraryComponent("no library instances in the root component")
    return ObligationReport(tuple(results))


# ---------------------------------------------------------------------------
# Task systems
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class TaskSpec:
    """One periodic task, all times in integer milliseconds.

    deadline is relative to dispatch; priority 1 is highest; the compute
    time is drawn from [bcet, wcet]."""
    name: str
    period: int
    offset: int
    deadline: int
    priority: int
    bcet: int
    wcet: int

    def __post_init__(self):
        if not re.fullmatch(r"[A-Za-z_][A-Za-z0-9_]*", self.name):
            raise InvalidTaskSpec(f"task name must be an identifier: {self.name!r}")
        for f in ("period", "offset", "deadline", "priority", "bcet", "wcet"):
            v = getattr(self, f)
            if not isinstance(v, int):
                raise InvalidTaskSpec(f"{self.name}: {f} must be an integer, got {v!r}")
        if self.period <= 0:
            raise InvalidTaskSpec(f"{self.name}: period must be positive")
        if not 0 <= self.offset < self.period:
            raise InvalidTaskSpec(f"{self.name}: need 0 <= offset < period")
        if not 0 < self.deadline <= self.period:
            raise InvalidTaskSpec(f"{self.name}: need 0 < deadline <= period")
        if not 0 <= self.bcet <= self.wcet:
            raise InvalidTaskSpec(f"{self.name}: need 0 <= bcet <= wcet")
        if self.wcet > self.deadline:
            raise InvalidTaskSpec(f"{self.name}: wcet exceeds the deadline")
        if self.wcet <= 0:
            raise InvalidTaskSpec(f"{self.name}: wcet must be positive")


def parse_task_table(text: str) -> list[TaskSpec]:
    """One task per line: name period offset deadline priority bcet wcet.
    Blank lines and #-comments are skipped."""
    tasks = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        cols = line.split()
        if len(cols) != 7:
            raise InvalidTaskSpec(
                f"line {lineno}: expected 7 columns "
                f"(name period offset deadline priority bcet wcet), got {len(cols)}")
        name = cols[0]
        try:
            nums = [int(c) for c in cols[1:]]
        except ValueError:
            raise InvalidTaskSpec(f"line {lineno}: non-integer field in {line!r}")
        try:
            tasks.append(TaskSpec(name, *nums))
        except InvalidTaskSpec as e:
            raise InvalidTaskSpec(f"line {lineno}: {e}") from None
    _validate_tasks(tasks)
    return tasks


def _validate_tasks(tasks: list[TaskSpec]):
    if not tasks:
        raise InvalidTaskSpec("task set is empty")
    names = [t.name for t in tasks]
    if len(set(names)) != len(names):
        raise InvalidTaskSpec("duplicate task names")
    prios = [t.priority for t in tasks]
    if len(set(prios)) != len(prios):
        raise InvalidTaskSpec("priorities must be distinct")


_ET_MODES = {
    "det-wcet": "det-wcet", "deterministic-wcet": "det-wcet", "wcet": "det-wcet",
    "interval": "interval",
}

# Task controller: dispatch at offset + k*period, completion window [0, D]
# guarded by the shared status variable, deadline check in a dedicated state
# so a miss reaches sched_error at the deadline instant regardless of where
# the executor is stuck.  The boot delay is a port (not a wait) so the
# release chain can be prioritized over same-instant grant decisions.
_TASK_CONTROLLER = """\
process ctrl_{nm} [b : none, d : none, c : none, dl : none, w : none] (&st : pstate) is
  states boot, disp, win, chk, sched_error
  from boot b; to disp
  from disp d; to win
  from win
    select
      on (st = p_idle); c; st := p_rdy; loop
    []
      dl; to chk
    end
  from chk
    select
      on (st = p_rdy); w; st := p_idle; to disp
    unless
      on (st = p_idle); wait [0,0]; to sched_error
    end"""

_TASK_EXECUTOR = """\
process exec_{nm} [d : none, g : none, c : none] is
  states e0, rdy, run, fin
  from e0 d; to rdy
  from rdy g; to run
  from run wait [{B},{W}]; to fin
  from fin c; to e0"""


def tasksystem_source(tasks: list[TaskSpec], et_mode: str = "interval") -> str:
    """Source text of the composed task system: one controller and one
    executor per task plus a single non-preemptive scheduler."""
    _validate_tasks(tasks)
    mode = _ET_MODES.get(et_mode.lower())
    if mode is None:
        raise InvalidTaskSpec(f"unknown execution-time mode: {et_mode!r}")

    parts = ["type pstate is union p_idle | p_rdy | p_err end"]
    for t in tasks:
        parts.append(_TASK_CONTROLLER.format(nm=t.name))
        lo = t.wcet if mode == "det-wcet" else t.bcet
        parts.append(_TASK_EXECUTOR.format(nm=t.name, B=lo, W=t.wcet))

    sched_ports = ", ".join(f"g_{t.name} : none, c_{t.name} : none" for t in tasks)
    sched_states = ", ".join(["free"] + [f"busy_{t.name}" for t in tasks])
    lines = [f"process sched [{sched_ports}] is", f"  states {sched_states}",
             "  from free"]
    if len(tasks) == 1:
        lines.append(f"    g_{tasks[0].name}; to busy_{tasks[0].name}")
    else:
        lines.append("    select")
        for i, t in enumerate(tasks):
            if i:
                lines.append("    []")
            lines.append(f"      g_{t.name}; to busy_{t.name}")
        lines.append("    end")
    for t in tasks:
        lines.append(f"  from busy_{t.name} c_{t.name}; to free")
    parts.append("\n".join(lines))

    body = []
    for t in tasks:
        rest = t.period - t.deadline
        body += [
            f"  port b_{t.name} : none in [{t.offset},{t.offset}]",
            f"  port d_{t.name} : none in [0,0]",
            f"  port c_{t.name} : none in [0,0]",
            f"  port g_{t.name} : none in [0,0]",
            f"  port dl_{t.name} : none in [{t.deadline},{t.deadline}]",
            f"  port w_{t.name} : none in [{rest},{rest}]",
        ]
    for t in tasks:
        body.append(f"  var st_{t.name} : pstate := p_idle")
    # Per task: completion beats the deadline check beats redispatch.  Across
    # tasks: a task released at some instant (boot, period tick, dispatch)
    # must become ready before any grant fires at that instant, and grants
    # follow the fixed task priorities.  Completion-vs-grant needs no
    # ordering: the scheduler location makes them mutually exclusive.
    for t in tasks:
        body.append(f"  priority c_{t.name} > dl_{t.name} > d_{t.name}")
    for t in tasks:
        for u in tasks:
            for rel in ("b", "w", "d"):
                body.append(f"  priority {rel}_{t.name} > g_{u.name}")
    by_prio = sorted(tasks, key=lambda t: t.priority)
    if len(by_prio) > 1:
        body.append("  priority " + " > ".join(f"g_{t.name}" for t in by_prio))
    body.append("  par * in")
    insts = []
    for t in tasks:
        insts.append(
            f"    t_{t.name} : ctrl_{t.name} [b_{t.name}, d_{t.name}, "
            f"c_{t.name}, dl_{t.name}, w_{t.name}] (&st_{t.name})")
        insts.append(f"    e_{t.name} : exec_{t.name} [d_{t.name}, g_{t.name}, c_{t.name}]")
    insts.append("    sch : sched [" +
                 ", ".join(f"g_{t.name}, c_{t.name}" for t in tasks) + "]")
    body.append("\n    ||".join(insts).replace("\n    ||    ", "\n    || "))
    body.append("  end")
    parts.append("component main is\n" + "\n".join(body))
    return "\n\n".join(parts) + "\n"


def build_tasksystem(tasks: list[TaskSpec], et_mode: str = "interval") -> Program:
    src = tasksystem_source(tasks, et_mode)
    program = parse_program(src, filename=f"<tasksystem:{et_mode}>")
    diags = model.check_wellformed(program)
    assert not diags, f"generated model is malformed: {diags}"
    return program


@dataclass(frozen=True)
class SchedResult:
    """Outcome of a schedulability run.  schedulable is None when the
    exploration hit a resource limit before a verdict."""
    schedulable: Optional[bool]
    verdict: Verdict
    missed: tuple[str, ...]
    n_classes: int
    seconds: float
    counterexample: Optional[Counterexample] = None
    check: Optional[CheckResult] = field(default=None, repr=False, compare=False)


def check_schedulable(program: Program, *, max_classes: int = 2_000_000,
                      time_budget: Optional[float] = None) -> SchedResult:
    """Decide schedulability: no controller ever reaches sched_error."""
    comp = program.root_component()
    atoms = []
    labels = {}
    for idx, inst in enumerate(comp.instances, start=1):
        proc = program.process(inst.target)
        if proc is not None and "sched_error" in proc.states:
            atoms.append(StateAtom(idx, "sched_error"))
            labels[idx] = inst.label or str(idx)
    if not atoms:
        raise InvalidTaskSpec("program has no deadline-monitored instances")

    tts = compile_program(program)
    pattern = Unreachable(tuple(atoms))
    t0 = time.perf_counter()
    res = check_pattern(tts, pattern, max_classes=max_classes,
                        time_budget=time_budget)
    dt = time.perf_counter() - t0

    missed: tuple[str, ...] = ()
    cex = None
    schedulable: Optional[bool] = None
    if isinstance(res.verdict, Holds):
        schedulable = True
    elif isinstance(res.verdict, Violated):
        schedulable = False
        cex = res.verdict.counterexample
        last = cex.prefix[-1].dst if cex.prefix else res.graph.initial
        st = res.graph.states[last]
        missed = tuple(labels[a.instance] for a in pattern.targets
                       if res.system.state_pred(a)(st))
    return SchedResult(schedulable=schedulable, verdict=res.verdict,
                       missed=missed, n_classes=res.graph.n_classes,
                       seconds=dt, counterexample=cex, check=res)


def scalability_tasks(step: int) -> list[TaskSpec]:
    """A ladder of task sets with steadily growing composed state spaces:
    pairwise coprime periods keep the hyperperiod large and interval
    execution times keep the firing domains branching.  Step 0 is a 3-task
    set, step 1 adds a fourth task, and each later step widens the last
    task's compute window one unit further."""
    if step < 0:
        raise InvalidTaskSpec("step must be nonnegative")
    periods = [7, 11, 13, 17]
    n = 3 if step == 0 else 4
    tasks = []
    for i in range(n - 1):
        p = periods[i]
        tasks.append(TaskSpec(name=f"T{i + 1}", period=p, offset=i % 3,
                              deadline=p, priority=i + 1, bcet=1, wcet=2))
    p = periods[n - 1]
    wc = min(2 + max(0, step - 1), p)
    tasks.append(TaskSpec(name=f"T{n}", period=p, offset=(n - 1) % 3,
                          deadline=p, priority=n, bcet=1, wcet=wc))
    return tasks
