"""Realtime requirement patterns checked through timed observers.

A timed pattern (bounded response, bounded absence) compiles to a small
deterministic observer automaton that is composed with the system: the
observer rides along as one extra state slot, reclassifying every transition
by whether it carries a trigger or response occurrence, and adds a few
internal point-interval transitions that measure the window.  The pattern
holds iff the observer's error location is unreachable in the composed class
graph, which also yields concrete timed counterexamples.

The composition never constrains the base system: observer moves piggyback
on the updates of existing transitions (their guards, intervals and
enabledness are untouched), and the observer's own clock transitions are
always fireable when due.  Window boundaries follow the strictness of the
window ends exactly, through three mechanisms: an inclusive deadline is
detected by a lazy clock released strictly after it, an inclusive opening
gives the opening clock priority over same-instant occurrences (which may
still fire strictly earlier), and a strict opening seals its instant so
occurrences land on the far side only when strictly later.

Trigger anchoring is "earliest" by default: while a trigger is pending,
further triggers are ignored until it is answered.  With anchor="latest"
every new trigger restarts the window.  Occurrences are event atoms,
state/value atoms read as becomes-true edges, or the start of the system.
Untimed patterns (deadlock freedom, unreachability, resettability) are
decided directly on the class graph.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Optional, Union

from tempock import model
from tempock.classgraph import ClassGraph, build_graph
from tempock.ltl import (
    Counterexample,
    Exhausted,
    FAlways,
    FAtom,
    FNot,
    FOr,
    Formula,
    Holds,
    Step,
    Verdict,
    Violated,
    check as ltl_check,
    timestamp,
)
from tempock.model import (
    Atom,
    DeadAtom,
    EventAtom,
    ObservablePath,
    StartAtom,
    StateAtom,
    TimeInterval,
    ValueAtom,
    resolve_observable,
)
from tempock.tts import Transition, Tts, close_dominators


class PatternError(Exception):
    pass


class AmbiguousObservable(Exception):
    """A nondeterministic update leaves a becomes-true occurrence undecided."""


# ---------------------------------------------------------------------------
# Pattern syntax


@dataclass(frozen=True)
class LeadsToWithin:
    trigger: tuple[Atom, ...]
    response: tuple[Atom, ...]
    window: TimeInterval
    anchor: str = "earliest"  # or "latest"


@dataclass(frozen=True)
class AbsentAfterWithin:
    trigger: tuple[Atom, ...]
    forbidden: tuple[Atom, ...]
    window: TimeInterval


@dataclass(frozen=True)
class Absent:
    """No occurrence of any target, ever; decided as [] not targets."""

    targets: tuple[Atom, ...]


@dataclass(frozen=True)
class NoGlobalDeadlock:
    pass


@dataclass(frozen=True)
class Unreachable:
    targets: tuple[Atom, ...]


@dataclass(frozen=True)
class Resettable:
    targets: tuple[Atom, ...]


@dataclass(frozen=True)
class RawLtl:
    formula: Formula


Pattern = Union[LeadsToWithin, AbsentAfterWithin, Absent, NoGlobalDeadlock,
                Unreachable, Resettable, RawLtl]


def resolve_pattern(program: model.Program, body) -> Pattern:
    """Replace observable paths with resolved atoms throughout a pattern."""

    def ratom(a):
        if isinstance(a, ObservablePath):
            return resolve_observable(program, a)
        return a

    def ratoms(atoms):
        return tuple(ratom(a) for a in atoms)

    if isinstance(body, LeadsToWithin):
        return LeadsToWithin(ratoms(body.trigger), ratoms(body.response),
                             body.window, body.anchor)
    if isinstance(body, AbsentAfterWithin):
        return AbsentAfterWithin(ratoms(body.trigger), ratoms(body.forbidden),
                                 body.window)
    if isinstance(body, Absent):
        return Absent(ratoms(body.targets))
    if isinstance(body, Unreachable):
        return Unreachable(ratoms(body.targets))
    if isinstance(body, Resettable):
        return Resettable(ratoms(body.targets))
    if isinstance(body, NoGlobalDeadlock):
        return body
    if isinstance(body, RawLtl):
        return RawLtl(_resolve_formula(program, body.formula))
    raise PatternError(f"not a property body: {body!r}")


def _resolve_formula(program, f: Formula) -> Formula:
    if isinstance(f, FAtom):
        if isinstance(f.atom, ObservablePath):
            return FAtom(resolve_observable(program, f.atom))
        return f
    if hasattr(f, "left"):
        return type(f)(_resolve_formula(program, f.left),
                       _resolve_formula(program, f.right))
    if hasattr(f, "f"):
        return type(f)(_resolve_formula(program, f.f))
    return f


# ---------------------------------------------------------------------------
# Observer automata


@dataclass
class Observer:
    initial: int
    err: int
    react: list[dict[tuple[bool, bool], int]]  # per location: (A, B) -> target
    taus: list[tuple[int, int, TimeInterval, str, bool]]  # src, tgt, interval, tag, seal
    prio: list[str]  # tags whose clock outranks same-instant occurrences
    loc_names: list[str]

    @property
    def n_locs(self) -> int:
        return len(self.react)


def _pt(x: Fraction) -> TimeInterval:
    return TimeInterval(x, x, False, False)


IDLE, COPY_A1, COPY_B1, COPY_A2, COPY_B2, ERR = range(6)


def leadsto_observer(window: TimeInterval, anchor: str = "earliest",
                     start_armed: bool = False) -> Observer:
    """Bounded response: every trigger is answered within the window.

    Locations: idle, early (window not open yet, two copies), main (window
    open, two copies), error.  Two copies of each timed location alternate
    on re-arming so the measuring transition is freshly enabled and its
    clock restarts.
    """
    if window.upper is None:
        raise PatternError("a response window needs a finite upper bound")
    l, u = window.lower, window.upper
    use_early = l > 0 or window.lower_strict
    zero_in = window.contains(Fraction(0))
    latest = anchor == "latest"
    early = {True: COPY_A1, False: COPY_B1}
    main = {True: COPY_A2, False: COPY_B2}
    arm = {True: early[True] if use_early else main[True],
           False: early[False] if use_early else main[False]}

    react: list[dict[tuple[bool, bool], int]] = [dict() for _ in range(6)]

    def fill(loc, none, a, b, ab):
        react[loc][(False, False)] = none
        react[loc][(True, False)] = a
        react[loc][(False, True)] = b
        react[loc][(True, True)] = ab

    fill(IDLE, IDLE, arm[True], IDLE, IDLE if zero_in else arm[True])
    for first in (True, False):
        e, m = early[first], main[first]
        other = not first
        fill(e, e, early[other] if latest else e, ERR, ERR)
        fill(m, m,
             arm[other] if latest else m,
             IDLE,
             IDLE if zero_in else arm[other])
    fill(ERR, ERR, ERR, ERR, ERR)

    taus = []
    if use_early:
        taus.append((early[True], main[True], _pt(l), "open", False))
        taus.append((early[False], main[False], _pt(l), "open", False))
    # the deadline clock is lazy: released just past the window end, firing
    # whenever the trigger is still unanswered there, so reaching the error
    # is exactly the existence of an unanswered-too-long run
    rest = u - (l if use_early else 0)
    late = TimeInterval(rest, None, not window.upper_strict, True)
    taus.append((main[True], ERR, late, "timeout", False))
    taus.append((main[False], ERR, late, "timeout", False))

    # an inclusive opening admits same-instant responses only after the
    # window opens; the priority caps earlier copies strictly below it
    prio = ["open"] if use_early and not window.lower_strict else []

    return Observer(
        initial=arm[True] if start_armed else IDLE,
        err=ERR,
        react=react,
        taus=taus,
        prio=prio,
        loc_names=["idle", "early", "early'", "main", "main'", "err"],
    )


def absent_observer(window: TimeInterval, start_armed: bool = False) -> Observer:
    """Bounded absence: no forbidden occurrence within the window after a
    trigger.  A later trigger restarts the window; the triggering occurrence
    itself is not forbidden even when the two sets overlap."""
    d1 = window.lower
    d2 = window.upper  # None: forbidden forever after the offset
    use_pre = d1 > 0 or window.lower_strict
    pre = {True: COPY_A1, False: COPY_B1}
    opn = {True: COPY_A2, False: COPY_B2}
    arm = {True: pre[True] if use_pre else opn[True],
           False: pre[False] if use_pre else opn[False]}

    react: list[dict[tuple[bool, bool], int]] = [dict() for _ in range(6)]

    def fill(loc, none, a, b, ab):
        react[loc][(False, False)] = none
        react[loc][(True, False)] = a
        react[loc][(False, True)] = b
        react[loc][(True, True)] = ab

    fill(IDLE, IDLE, arm[True], IDLE, arm[True])
    for first in (True, False):
        p, o = pre[first], opn[first]
        other = not first
        fill(p, p, arm[other], p, arm[other])
        fill(o, o, arm[other], ERR, ERR)
    fill(ERR, ERR, ERR, ERR, ERR)

    taus = []
    if use_pre:
        # a strict opening seals its instant: occurrences at exactly the
        # boundary stay on the allowed side, later ones are strictly inside
        taus.append((pre[True], opn[True], _pt(d1), "open", window.lower_strict))
        taus.append((pre[False], opn[False], _pt(d1), "open", window.lower_strict))
    if d2 is not None:
        rest = d2 - (d1 if use_pre else 0)
        taus.append((opn[True], IDLE, _pt(rest), "close", False))
        taus.append((opn[False], IDLE, _pt(rest), "close", False))

    # a strict closing must not blame occurrences at exactly the window end,
    # so the closing clock outranks them; an inclusive end needs no ranking
    # (the error interleaving at the boundary is then genuine)
    prio = ["close"] if d2 is not None and window.upper_strict else []

    return Observer(
        initial=arm[True] if start_armed else IDLE,
        err=ERR,
        react=react,
        taus=taus,
        prio=prio,
        loc_names=["idle", "pre", "pre'", "open", "open'", "err"],
    )


# ---------------------------------------------------------------------------
# Occurrence classification and product construction


def _classify(tts: Tts, atoms: tuple[Atom, ...], allow_start: bool):
    """Split an atom disjunction into statically matching transition ids,
    dynamic becomes-true predicates, and a start-of-system flag."""
    always: set[int] = set()
    preds: list[Callable] = []
    start = False
    for a in atoms:
        if isinstance(a, StartAtom):
            if not allow_start:
                raise PatternError("the start marker cannot be an answer")
            start = True
        elif isinstance(a, EventAtom):
            always |= tts.event_tids(a)
        elif isinstance(a, StateAtom):
            slot = a.instance - 1
            target = tts.loc_index[slot].get(a.state)
            if target is None:
                raise model.UnknownState(
                    f"instance {a.instance} has no state {a.state}"
                )
            for t in tts.transitions:
                for ps, src, tgt in t.parts:
                    if ps == slot and tgt == target and src != target:
                        always.add(t.tid)
        elif isinstance(a, ValueAtom):
            preds.append(tts.state_pred(a))
        elif isinstance(a, DeadAtom):
            raise PatternError("deadlock is not an observable occurrence")
        else:
            raise PatternError(f"not an observable occurrence: {a!r}")
    return always, preds, start


def _becomes_fn(t: Transition, preds: list[Callable], what: str) -> Callable:
    ps = tuple(preds)

    def occ(s, _t=t, _ps=ps, _w=what):
        outs = None
        for p in _ps:
            if p(s):
                continue
            if outs is None:
                outs = _t.update(s)
            vals = {p(o) for o in outs}
            if len(vals) > 1:
                raise AmbiguousObservable(
                    f"{_t.name}: nondeterministic update leaves the {_w} "
                    "predicate undecided"
                )
            if vals.pop():
                return True
        return False

    return occ


def compose(tts: Tts, obs: Observer, trigger: tuple[Atom, ...],
            response: tuple[Atom, ...]) -> Tts:
    """System extended with one observer slot at the end of the state."""
    a_always, a_preds, _ = _classify(tts, trigger, allow_start=True)
    b_always, b_preds, b_start = _classify(tts, response, allow_start=False)
    assert not b_start

    new = Tts()
    new.program = tts.program
    new.component = tts.component
    new.n_inst = tts.n_inst
    new.instance_names = tts.instance_names
    new.loc_names = tts.loc_names
    new.loc_index = tts.loc_index
    new.var_names = tts.var_names + ["watch"]
    new.var_pretty = tts.var_pretty + [
        lambda v, _n=obs.loc_names: _n[v] if 0 <= v < len(_n) else str(v)
    ]
    new.inst_var_slots = tts.inst_var_slots
    new.enum_codes = tts.enum_codes
    new.binding = tts.binding
    obs_slot = tts.n_slots
    new.initial = tts.initial + (obs.initial,)

    base_of: list[Optional[int]] = []
    comp_of_base: dict[int, list[int]] = {}
    b_labeled: list[int] = []
    react = obs.react

    def stay_table(label: tuple[bool, bool]) -> bool:
        return all(react[loc][label] == loc for loc in range(obs.n_locs))

    for t in tts.transitions:
        a_opts = [True] if t.tid in a_always else ([False, True] if a_preds else [False])
        b_opts = [True] if t.tid in b_always else ([False, True] if b_preds else [False])
        a_dyn = t.tid not in a_always and bool(a_preds)
        b_dyn = t.tid not in b_always and bool(b_preds)
        occ_a = _becomes_fn(t, a_preds, "trigger") if a_dyn else None
        occ_b = _becomes_fn(t, b_preds, "answer") if b_dyn else None
        for av in a_opts:
            for bv in b_opts:
                extras = []
                if a_dyn:
                    extras.append(occ_a if av else
                                  (lambda s, _f=occ_a: not _f(s)))
                if b_dyn:
                    extras.append(occ_b if bv else
                                  (lambda s, _f=occ_b: not _f(s)))
                label = (av, bv)
                if extras:
                    def guard(s, _g=t.guard, _ex=tuple(extras)):
                        if not _g(s):
                            return False
                        for f in _ex:
                            if not f(s):
                                return False
                        return True
                else:
                    guard = t.guard

                if stay_table(label):
                    upd = t.update
                else:
                    def upd(s, _u=t.update, _tab=label):
                        tgt = react[s[-1]][_tab]
                        outs = _u(s)
                        if tgt == s[-1]:
                            return outs
                        return tuple(o[:-1] + (tgt,) for o in outs)

                tid = len(new.transitions)
                new.transitions.append(
                    Transition(tid=tid, event=t.event, parts=t.parts,
                               guard=guard, update=upd, interval=t.interval,
                               pretty=t.pretty, name=t.name)
                )
                base_of.append(t.tid)
                comp_of_base.setdefault(t.tid, []).append(tid)
                if bv:
                    b_labeled.append(tid)

    tau_by_tag: dict[str, list[int]] = {}
    for src, tgt, interval, tag, seal in obs.taus:
        tid = len(new.transitions)

        def upd(s, _tgt=tgt):
            return (s[:-1] + (_tgt,),)

        new.transitions.append(
            Transition(tid=tid, event=None,
                       parts=((obs_slot, src, tgt),),
                       guard=lambda s: True, update=upd, interval=interval,
                       pretty=f"watch:{obs.loc_names[src]}->{obs.loc_names[tgt]}",
                       name=f"watch.{tag}", seal=seal)
        )
        base_of.append(None)
        tau_by_tag.setdefault(tag, []).append(tid)

    new.port_tids = {
        g: frozenset(ct for t in tids for ct in comp_of_base.get(t, ()))
        for g, tids in tts.port_tids.items()
    }

    pairs: set[tuple[int, int]] = set()
    for lt, mask in enumerate(tts.dominators):
        h = 0
        while mask:
            if mask & 1:
                for ch in comp_of_base.get(h, ()):
                    for cl in comp_of_base.get(lt, ()):
                        pairs.add((ch, cl))
            mask >>= 1
            h += 1
    for tag in obs.prio:
        for tau in tau_by_tag.get(tag, ()):
            for ev in b_labeled:
                pairs.add((tau, ev))
    new.dominators = close_dominators(len(new.transitions), pairs)

    new.base_tid = base_of
    new.obs_slot = obs_slot
    new.observer = obs
    return new


# ---------------------------------------------------------------------------
# Verdicts


@dataclass
class CheckResult:
    verdict: Verdict
    graph: ClassGraph
    system: Tts  # the system the graph was built on (bare or composed)
    composed: bool = False


def _bfs_path(graph: ClassGraph, targets) -> list[tuple[int, Optional[int], int]]:
    """Shortest edge path from the initial class to any target class."""
    if graph.initial in targets:
        return []
    parent: dict[int, tuple[int, int]] = {graph.initial: (-1, -1)}
    order = [graph.initial]
    adj = graph.adjacency()
    for ci in order:
        for tid, dst in adj[ci]:
            if dst not in parent:
                parent[dst] = (ci, tid)
                if dst in targets:
                    path = []
                    cur = dst
                    while cur != graph.initial:
                        src, t = parent[cur]
                        path.append((src, t, cur))
                        cur = src
                    path.reverse()
                    return path
                order.append(dst)
    raise PatternError("no path to a target class")


def _prefix_cex(graph: ClassGraph, system: Tts,
                edges: list[tuple[int, Optional[int], int]]) -> Counterexample:
    stamps = timestamp(graph, system, edges)
    steps = tuple(
        Step(src=e[0], tid=e[1], dst=e[2], earliest=lo, latest=hi)
        for e, (lo, hi) in zip(edges, stamps)
    )
    return Counterexample(prefix=steps, cycle=())


def check_pattern(tts: Tts, pattern: Pattern, *,
                  graph: Optional[ClassGraph] = None,
                  max_classes: Optional[int] = None,
                  time_budget: Optional[float] = None,
                  threads: int = 1) -> CheckResult:
    """Decide one pattern; builds whatever graph the pattern needs."""

    def bare() -> ClassGraph:
        nonlocal graph
        if graph is None:
            graph = build_graph(tts, max_classes=max_classes,
                                time_budget=time_budget, threads=threads)
        return graph

    if isinstance(pattern, (LeadsToWithin, AbsentAfterWithin)):
        if isinstance(pattern, LeadsToWithin):
            _, _, start_armed = _classify(tts, pattern.trigger, allow_start=True)
            obs = leadsto_observer(pattern.window, pattern.anchor, start_armed)
            trigger, answer = pattern.trigger, pattern.response
        else:
            _, _, start_armed = _classify(tts, pattern.trigger, allow_start=True)
            obs = absent_observer(pattern.window, start_armed)
            trigger, answer = pattern.trigger, pattern.forbidden
        trigger = tuple(a for a in trigger if not isinstance(a, StartAtom))
        comp = compose(tts, obs, trigger, answer)
        g = build_graph(comp, max_classes=max_classes,
                        time_budget=time_budget, threads=threads)
        if g.limit_hit:
            return CheckResult(Exhausted(f"exploration stopped: {g.limit_hit}"),
                               g, comp, composed=True)
        bad = {ci for ci, st in enumerate(g.states) if st[-1] == obs.err}
        if not bad:
            return CheckResult(Holds(), g, comp, composed=True)
        cex = _prefix_cex(g, comp, _bfs_path(g, bad))
        return CheckResult(Violated(cex), g, comp, composed=True)

    if isinstance(pattern, Absent):
        g = bare()
        if g.limit_hit:
            return CheckResult(Exhausted(f"exploration stopped: {g.limit_hit}"),
                               g, tts)
        f: Formula = FAtom(pattern.targets[0])
        for a in pattern.targets[1:]:
            f = FOr(f, FAtom(a))
        return CheckResult(ltl_check(g, FAlways(FNot(f)), tts), g, tts)

    if isinstance(pattern, NoGlobalDeadlock):
        g = bare()
        if g.limit_hit:
            return CheckResult(Exhausted(f"exploration stopped: {g.limit_hit}"),
                               g, tts)
        if not g.dead:
            return CheckResult(Holds(), g, tts)
        path = _bfs_path(g, g.dead)
        end = path[-1][2] if path else g.initial
        path.append((end, None, end))
        return CheckResult(Violated(_prefix_cex(g, tts, path)), g, tts)

    if isinstance(pattern, Unreachable):
        g = bare()
        if g.limit_hit:
            return CheckResult(Exhausted(f"exploration stopped: {g.limit_hit}"),
                               g, tts)
        preds = [tts.state_pred(a) for a in pattern.targets]
        bad = {ci for ci, st in enumerate(g.states) if any(p(st) for p in preds)}
        if not bad:
            return CheckResult(Holds(), g, tts)
        return CheckResult(Violated(_prefix_cex(g, tts, _bfs_path(g, bad))),
                           g, tts)

    if isinstance(pattern, Resettable):
        g = bare()
        if g.limit_hit:
            return CheckResult(Exhausted(f"exploration stopped: {g.limit_hit}"),
                               g, tts)
        preds = [tts.state_pred(a) for a in pattern.targets]
        good = {ci for ci, st in enumerate(g.states) if any(p(st) for p in preds)}
        rev: list[list[int]] = [[] for _ in range(g.n_classes)]
        for src, _, dst in g.edges:
            rev[dst].append(src)
        coreach = set(good)
        stack = list(good)
        while stack:
            ci = stack.pop()
            for p in rev[ci]:
                if p not in coreach:
                    coreach.add(p)
                    stack.append(p)
        bad = {ci for ci in range(g.n_classes) if ci not in coreach}
        if not bad:
            return CheckResult(Holds(), g, tts)
        return CheckResult(Violated(_prefix_cex(g, tts, _bfs_path(g, bad))),
                           g, tts)

    if isinstance(pattern, RawLtl):
        g = bare()
        if g.limit_hit:
            return CheckResult(Exhausted(f"exploration stopped: {g.limit_hit}"),
                               g, tts)
        return CheckResult(ltl_check(g, pattern.formula, tts), g, tts)

    raise PatternError(f"unknown pattern: {pattern!r}")


# ---------------------------------------------------------------------------
# Observer non-interference


def projected_language(graph: ClassGraph, base_of: Optional[list],
                       depth: int, max_seqs: int = 1_000_000) -> frozenset:
    """All fired base-transition sequences up to the given length, with
    observer-internal steps erased."""

    adj = graph.adjacency()

    def eps_closure(cis: frozenset) -> frozenset:
        if base_of is None:
            return cis
        out = set(cis)
        stack = list(cis)
        while stack:
            ci = stack.pop()
            for tid, dst in adj[ci]:
                if base_of[tid] is None and dst not in out:
                    out.add(dst)
                    stack.append(dst)
        return frozenset(out)

    langs: set[tuple[int, ...]] = {()}
    frontier: dict[tuple[int, ...], frozenset] = {
        (): eps_closure(frozenset([graph.initial]))
    }
    for _ in range(depth):
        nxt: dict[tuple[int, ...], set[int]] = {}
        for seq, cis in frontier.items():
            for ci in cis:
                for tid, dst in adj[ci]:
                    b = base_of[tid] if base_of is not None else tid
                    if b is None:
                        continue
                    nxt.setdefault(seq + (b,), set()).add(dst)
        if not nxt:
            break
        frontier = {seq: eps_closure(frozenset(cis)) for seq, cis in nxt.items()}
        langs.update(frontier.keys())
        if len(langs) > max_seqs:
            raise PatternError("projected language too large to compare")
    return frozenset(langs)


def check_noninterference(tts: Tts, composed: Tts, depth: int = 10,
                          max_classes: Optional[int] = None) -> tuple[bool, str]:
    """The composed system must show exactly the base firing languages."""
    g0 = build_graph(tts, max_classes=max_classes)
    g1 = build_graph(composed, max_classes=max_classes)
    if g0.limit_hit or g1.limit_hit:
        return False, "exploration incomplete"
    l0 = projected_language(g0, None, depth)
    l1 = projected_language(g1, composed.base_tid, depth)
    if l0 == l1:
        return True, f"{len(l0)} sequences agree to depth {depth}"
    only0 = len(l0 - l1)
    only1 = len(l1 - l0)
    return False, (
        f"{only0} sequences lost and {only1} added by the observer "
        f"(depth {depth})"
    )
