"""State-Event LTL over the class graph.

Atoms are state predicates (locations, variable values, deadness) and event
predicates (a transition labeled with a given port fires).  A formula is
refuted by translating its negation to a Buchi automaton (tableau
construction), taking the product with the class graph on the fly, and
searching for an accepting lasso with a nested depth-first search.

A position of the product consumes one class-graph edge: event atoms are
evaluated on the edge's label, state atoms on the source class.  Dead classes
are extended with an implicit stutter edge on which all event atoms are false
and `dead` holds, so safety violations inside deadlocks are caught.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Iterable, Optional, Union

from tempock import model
from tempock.model import Atom, DeadAtom, EventAtom, StartAtom


# ---------------------------------------------------------------------------
# Formula AST


@dataclass(frozen=True)
class FTrue:
    def __str__(self):
        return "true"


@dataclass(frozen=True)
class FFalse:
    def __str__(self):
        return "false"


@dataclass(frozen=True)
class FAtom:
    atom: Atom

    def __str__(self):
        return f"({self.atom})" if not isinstance(self.atom, DeadAtom) else "dead"


@dataclass(frozen=True)
class FNot:
    f: "Formula"

    def __str__(self):
        return f"(not {self.f})"


@dataclass(frozen=True)
class FAnd:
    left: "Formula"
    right: "Formula"

    def __str__(self):
        return f"({self.left} and {self.right})"


@dataclass(frozen=True)
class FOr:
    left: "Formula"
    right: "Formula"

    def __str__(self):
        return f"({self.left} or {self.right})"


@dataclass(frozen=True)
class FImplies:
    left: "Formula"
    right: "Formula"

    def __str__(self):
        return f"({self.left} => {self.right})"


@dataclass(frozen=True)
class FNext:
    f: "Formula"

    def __str__(self):
        return f"(X {self.f})"


@dataclass(frozen=True)
class FUntil:
    left: "Formula"
    right: "Formula"

    def __str__(self):
        return f"({self.left} until {self.right})"


@dataclass(frozen=True)
class FRelease:
    left: "Formula"
    right: "Formula"

    def __str__(self):
        return f"({self.left} release {self.right})"


@dataclass(frozen=True)
class FAlways:
    f: "Formula"

    def __str__(self):
        return f"([] {self.f})"


@dataclass(frozen=True)
class FEventually:
    f: "Formula"

    def __str__(self):
        return f"(<> {self.f})"


Formula = Union[
    FTrue, FFalse, FAtom, FNot, FAnd, FOr, FImplies, FNext, FUntil, FRelease, FAlways, FEventually
]


def nnf(f: Formula, negate: bool = False) -> Formula:
    """Negation normal form over {atoms, and, or, X, U, R}."""
    if isinstance(f, FTrue):
        return FFalse() if negate else FTrue()
    if isinstance(f, FFalse):
        return FTrue() if negate else FFalse()
    if isinstance(f, FAtom):
        return FNot(f) if negate else f
    if isinstance(f, FNot):
        return nnf(f.f, not negate)
    if isinstance(f, FImplies):
        return nnf(FOr(FNot(f.left), f.right), negate)
    if isinstance(f, FAnd):
        if negate:
            return FOr(nnf(f.left, True), nnf(f.right, True))
        return FAnd(nnf(f.left), nnf(f.right))
    if isinstance(f, FOr):
        if negate:
            return FAnd(nnf(f.left, True), nnf(f.right, True))
        return FOr(nnf(f.left), nnf(f.right))
    if isinstance(f, FNext):
        return FNext(nnf(f.f, negate))
    if isinstance(f, FAlways):
        return nnf(FRelease(FFalse(), f.f), negate)
    if isinstance(f, FEventually):
        return nnf(FUntil(FTrue(), f.f), negate)
    if isinstance(f, FUntil):
        if negate:
            return FRelease(nnf(f.left, True), nnf(f.right, True))
        return FUntil(nnf(f.left), nnf(f.right))
    if isinstance(f, FRelease):
        if negate:
            return FUntil(nnf(f.left, True), nnf(f.right, True))
        return FRelease(nnf(f.left), nnf(f.right))
    raise TypeError(f"not a formula: {f!r}")


def formula_atoms(f: Formula) -> set[Atom]:
    out: set[Atom] = set()

    def walk(g: Formula):
        if isinstance(g, FAtom):
            out.add(g.atom)
        elif isinstance(g, (FNot, FNext, FAlways, FEventually)):
            walk(g.f)
        elif isinstance(g, (FAnd, FOr, FImplies, FUntil, FRelease)):
            walk(g.left)
            walk(g.right)

    walk(f)
    return out


# ---------------------------------------------------------------------------
# Tableau construction (nondeterministic Buchi automaton)


class SizeExceeded(Exception):
    pass


class InfeasiblePath(Exception):
    pass


@dataclass
class Nba:
    """Explicit Buchi automaton; state labels are literal sets over atoms."""

    pos: list[frozenset[Atom]]  # atoms that must hold when entering state i
    neg: list[frozenset[Atom]]  # atoms that must not hold
    succ: list[tuple[int, ...]]
    initial: tuple[int, ...]
    accepting: frozenset[int]

    @property
    def n_states(self) -> int:
        return len(self.succ)


class _Node:
    __slots__ = ("nid", "incoming", "old", "nxt")

    def __init__(self, nid, incoming, old, nxt):
        self.nid = nid
        self.incoming = incoming
        self.old = old
        self.nxt = nxt


def to_buchi(f: Formula, budget: int = 100_000) -> Nba:
    """Automaton accepting exactly the infinite sequences satisfying f.

    Callers that refute a property pass the property's negation.
    """
    g = nnf(f)
    counter = itertools.count(1)
    record: dict[tuple[frozenset, frozenset], _Node] = {}
    INIT = 0

    def expand(new: set, old: set, nxt: set, incoming: set[int]):
        while True:
            if not new:
                key = (frozenset(old), frozenset(nxt))
                hit = record.get(key)
                if hit is not None:
                    hit.incoming |= incoming
                    return
                nid = next(counter)
                if nid > budget:
                    raise SizeExceeded(f"tableau node budget {budget} exceeded")
                record[key] = _Node(nid, set(incoming), key[0], key[1])
                expand(set(key[1]), set(), set(), {nid})
                return
            eta = new.pop()
            if isinstance(eta, FTrue):
                continue
            if isinstance(eta, FFalse):
                return
            if isinstance(eta, FAtom):
                if FNot(eta) in old:
                    return
                old.add(eta)
                continue
            if isinstance(eta, FNot):
                if eta.f in old:
                    return
                old.add(eta)
                continue
            if isinstance(eta, FAnd):
                for part in (eta.left, eta.right):
                    if part not in old:
                        new.add(part)
                old.add(eta)
                continue
            if isinstance(eta, FNext):
                old.add(eta)
                nxt.add(eta.f)
                continue
            if isinstance(eta, FOr):
                n2 = set(new)
                if eta.right not in old:
                    n2.add(eta.right)
                expand(n2, old | {eta}, set(nxt), set(incoming))
                if eta.left not in old:
                    new.add(eta.left)
                old.add(eta)
                continue
            if isinstance(eta, FUntil):
                n2 = set(new)
                if eta.right not in old:
                    n2.add(eta.right)
                expand(n2, old | {eta}, set(nxt), set(incoming))
                if eta.left not in old:
                    new.add(eta.left)
                old.add(eta)
                nxt.add(eta)
                continue
            if isinstance(eta, FRelease):
                n2 = set(new)
                for part in (eta.left, eta.right):
                    if part not in old:
                        n2.add(part)
                expand(n2, old | {eta}, set(nxt), set(incoming))
                if eta.right not in old:
                    new.add(eta.right)
                old.add(eta)
                nxt.add(eta)
                continue
            raise TypeError(f"formula not in normal form: {eta!r}")

    expand({g}, set(), set(), {INIT})

    nodes = sorted(record.values(), key=lambda n: n.nid)
    index = {n.nid: i for i, n in enumerate(nodes)}

    untils = sorted(
        {sub for sub in _subformulas(g) if isinstance(sub, FUntil)},
        key=str,
    )
    acc_sets: list[set[int]] = []
    for u in untils:
        acc_sets.append({i for i, n in enumerate(nodes) if u not in n.old or u.right in n.old})
    if not acc_sets:
        acc_sets.append(set(range(len(nodes))))
    k = len(acc_sets)

    gnba_succ: list[list[int]] = [[] for _ in nodes]
    gnba_init: list[int] = []
    for i, n in enumerate(nodes):
        if INIT in n.incoming:
            gnba_init.append(i)
        for src_nid in n.incoming:
            if src_nid != INIT:
                gnba_succ[index[src_nid]].append(i)

    pos_labels = []
    neg_labels = []
    for n in nodes:
        pos_labels.append(frozenset(x.atom for x in n.old if isinstance(x, FAtom)))
        neg_labels.append(frozenset(x.f.atom for x in n.old if isinstance(x, FNot)))

    # degeneralization: NBA states are (node, counter); the counter advances
    # when the current node lies in the counter's acceptance set
    def nba_id(i: int, c: int) -> int:
        return i * k + c

    succ: list[tuple[int, ...]] = [()] * (len(nodes) * k)
    pos: list[frozenset[Atom]] = [frozenset()] * (len(nodes) * k)
    neg: list[frozenset[Atom]] = [frozenset()] * (len(nodes) * k)
    for i in range(len(nodes)):
        for c in range(k):
            nc = (c + 1) % k if i in acc_sets[c] else c
            succ[nba_id(i, c)] = tuple(nba_id(j, nc) for j in sorted(set(gnba_succ[i])))
            pos[nba_id(i, c)] = pos_labels[i]
            neg[nba_id(i, c)] = neg_labels[i]
    accepting = frozenset(nba_id(i, 0) for i in acc_sets[0])
    initial = tuple(nba_id(i, 0) for i in sorted(set(gnba_init)))
    return Nba(pos=pos, neg=neg, succ=succ, initial=initial, accepting=accepting)


def _subformulas(f: Formula) -> Iterable[Formula]:
    yield f
    if isinstance(f, (FNot, FNext, FAlways, FEventually)):
        yield from _subformulas(f.f)
    elif isinstance(f, (FAnd, FOr, FImplies, FUntil, FRelease)):
        yield from _subformulas(f.left)
        yield from _subformulas(f.right)


# ---------------------------------------------------------------------------
# Verdicts and counterexamples


@dataclass(frozen=True)
class Step:
    src: int
    tid: Optional[int]  # None marks the deadlock stutter step
    dst: int
    earliest: Optional[Fraction] = None
    latest: Optional[Fraction] = None  # None means unbounded


@dataclass(frozen=True)
class Counterexample:
    prefix: tuple[Step, ...]
    cycle: tuple[Step, ...]  # empty for safety violations


@dataclass(frozen=True)
class Holds:
    kind: str = "Holds"


@dataclass(frozen=True)
class Violated:
    counterexample: Counterexample
    kind: str = "Violated"


@dataclass(frozen=True)
class Exhausted:
    reason: str
    kind: str = "Exhausted"


Verdict = Union[Holds, Violated, Exhausted]


# ---------------------------------------------------------------------------
# Product + nested depth-first search


def _atom_valuation(tts, graph, atoms: set[Atom]) -> Callable[[int, Optional[int]], dict]:
    """Builds val(class_idx, tid) -> {atom: bool} for the needed atoms."""
    event_sets: dict[Atom, frozenset[int]] = {}
    state_preds: dict[Atom, Callable] = {}
    for a in atoms:
        if isinstance(a, StartAtom):
            raise ValueError("start atoms are only meaningful in patterns, not LTL")
        if isinstance(a, EventAtom):
            event_sets[a] = tts.event_tids(a)
        elif isinstance(a, DeadAtom):
            pass
        else:
            state_preds[a] = tts.state_pred(a)

    state_cache: dict[int, dict[Atom, bool]] = {}

    def val(ci: int, tid: Optional[int]) -> dict:
        cached = state_cache.get(ci)
        if cached is None:
            st = graph.states[ci]
            cached = {a: p(st) for a, p in state_preds.items()}
            state_cache[ci] = cached
        out = dict(cached)
        for a, tids in event_sets.items():
            out[a] = tid is not None and tid in tids
        for a in atoms:
            if isinstance(a, DeadAtom):
                out[a] = tid is None
        return out

    return val


def check(graph, f: Formula, tts=None, max_product: int = 2_000_000) -> Verdict:
    """Model-check f over every infinite run (with deadlock stutter) of graph."""
    if tts is None:
        tts = graph.tts
    try:
        nba = to_buchi(nnf(FNot(f)))
    except SizeExceeded as e:
        return Exhausted(str(e))

    atoms = formula_atoms(f)
    try:
        val = _atom_valuation(tts, graph, atoms)
    except ValueError:
        raise

    adj = graph.adjacency()

    def edges_of(ci: int):
        real = adj[ci]
        if ci in graph.dead:
            return real + [(None, ci)]
        return real

    def sat(q: int, v: dict) -> bool:
        for a in nba.pos[q]:
            if not v[a]:
                return False
        for a in nba.neg[q]:
            if v[a]:
                return False
        return True

    # product states: (class, nba state); a virtual root fans out to initials
    visited: set[tuple[int, int]] = set()
    red_done: set[tuple[int, int]] = set()

    def successors(state):
        ci, q = state
        for tid, cj in edges_of(ci):
            v = val(ci, tid)
            for q2 in nba.succ[q]:
                if sat(q2, v):
                    yield (ci, tid, cj), (cj, q2)

    def initial_states():
        ci = graph.initial
        for tid, cj in edges_of(ci):
            v = val(ci, tid)
            for q in nba.initial:
                if sat(q, v):
                    yield (ci, tid, cj), (cj, q)

    # iterative nested DFS (blue search; red search from accepting postorder)
    for first_edge, s0 in initial_states():
        if s0 in visited:
            continue
        visited.add(s0)
        if len(visited) > max_product:
            return Exhausted("product state budget exceeded")
        blue_stack = [(s0, successors(s0))]
        path_edges = [first_edge]
        on_path = {s0: 0}
        path_states = [s0]
        while blue_stack:
            state, it = blue_stack[-1]
            advanced = False
            for edge, nxt in it:
                if nxt not in visited:
                    visited.add(nxt)
                    if len(visited) > max_product:
                        return Exhausted("product state budget exceeded")
                    blue_stack.append((nxt, successors(nxt)))
                    path_states.append(nxt)
                    path_edges.append(edge)
                    on_path[nxt] = len(path_states) - 1
                    advanced = True
                    break
            if advanced:
                continue
            blue_stack.pop()
            if state[1] in nba.accepting:
                lasso = _red_search(state, successors, on_path, red_done)
                if lasso is not None:
                    red_edges, anchor = lasso
                    k = on_path[anchor]
                    prefix_edges = path_edges[: k + 1]
                    cycle_edges = path_edges[k + 1 :] + red_edges
                    return Violated(_make_cex(graph, tts, prefix_edges, cycle_edges))
            on_path.pop(state)
            path_states.pop()
            path_edges.pop()
    return Holds()


def _red_search(seed, successors, on_path, red_done):
    """Search from seed for any state currently on the blue path.

    Returns (edge list from seed to the found state, found state) or None.
    """
    if seed in red_done:
        return None
    stack = [(seed, successors(seed))]
    parents: dict = {}
    local_seen = {seed}
    while stack:
        state, it = stack[-1]
        advanced = False
        for edge, nxt in it:
            if nxt in on_path:
                # reconstruct seed -> ... -> state -> nxt
                edges = [edge]
                cur = state
                while cur != seed:
                    pedge, prev = parents[cur]
                    edges.append(pedge)
                    cur = prev
                edges.reverse()
                return edges, nxt
            if nxt not in local_seen and nxt not in red_done:
                local_seen.add(nxt)
                parents[nxt] = (edge, state)
                stack.append((nxt, successors(nxt)))
                advanced = True
                break
        if not advanced:
            stack.pop()
            red_done.add(state)
    return None


def _make_cex(graph, tts, prefix_edges, cycle_edges) -> Counterexample:
    all_edges = list(prefix_edges) + list(cycle_edges)
    stamps = timestamp(graph, tts, all_edges)
    steps = [
        Step(src=e[0], tid=e[1], dst=e[2], earliest=lo, latest=hi)
        for e, (lo, hi) in zip(all_edges, stamps)
    ]
    return Counterexample(
        prefix=tuple(steps[: len(prefix_edges)]),
        cycle=tuple(steps[len(prefix_edges) :]),
    )


# ---------------------------------------------------------------------------
# Counterexample timestamping

from tempock.classgraph import (  # noqa: E402  (shared exact-bound encoding)
    INF_ENC,
    compute_scale,
    enc,
    enc_add,
)


def _path_constraints(graph, tts, edges, scale):
    """Difference constraints over the absolute firing times of a path."""
    n = len(edges) + 1
    INF = INF_ENC
    D = [[INF] * n for _ in range(n)]
    for i in range(n):
        D[i][i] = 1

    def tighten(i, j, bound):
        if bound < D[i][j]:
            D[i][j] = bound

    # step i in 1..k: time cannot flow backwards; a sealing step pushes the
    # rest of the path strictly past its instant
    seal_next = False
    for i in range(1, n):
        tid = edges[i - 1][1]
        tighten(i - 1, i, 0 if seal_next else 1)
        seal_next = tid is not None and tts.transitions[tid].seal

    # enabledness bookkeeping along the path
    enab: dict[int, int] = {}
    state = graph.states[edges[0][0]]
    cur_enabled = set(tts.enabled_ids(state))
    for u in cur_enabled:
        enab[u] = 0
    for i, (src, tid, dst) in enumerate(edges, start=1):
        pre_enabled = cur_enabled
        if tid is not None:
            if tid not in pre_enabled:
                raise InfeasiblePath(f"step {i} fires a disabled transition {tid}")
            # urgency of every enabled transition in the pre-state
            for u in pre_enabled:
                iv = tts.transitions[u].interval
                if iv.upper is not None:
                    b = enc(int(iv.upper * scale), iv.upper_strict)
                    tighten(i, enab[u], b)
            iv = tts.transitions[tid].interval
            e0 = enab[tid]
            if iv.upper is not None:
                tighten(i, e0, enc(int(iv.upper * scale), iv.upper_strict))
            tighten(e0, i, enc(-int(iv.lower * scale), iv.lower_strict))
            # an enabled higher-priority transition must not be released yet;
            # its point interval makes that one strict upper bound
            dom = tts.dominators[tid]
            if dom:
                for u in pre_enabled:
                    if u != tid and (dom >> u) & 1:
                        rel = tts.transitions[u].interval.lower
                        tighten(i, enab[u], enc(int(rel * scale), True))
        post_state = graph.states[dst]
        post_enabled = set(tts.enabled_ids(post_state))
        for u in post_enabled:
            if u not in pre_enabled or u == tid:
                enab[u] = i
        cur_enabled = post_enabled
    return D


def _close_path(D):
    n = len(D)
    rng = range(n)
    for m in rng:
        Dm = D[m]
        for i in rng:
            dim = D[i][m]
            if dim >= INF_ENC:
                continue
            Di = D[i]
            for j in rng:
                alt = enc_add(dim, Dm[j])
                if alt < Di[j]:
                    Di[j] = alt
    for i in rng:
        if D[i][i] < 1:
            raise InfeasiblePath("inconsistent constraint system along a graph path")


def timestamp(graph, tts, edges: list[tuple[int, Optional[int], int]]):
    """Per-step [earliest, latest] absolute firing times along a path.

    Solves the unfolded firing-window and urgency difference constraints with
    an all-pairs closure; each bound is individually tight (a single witness
    schedule hitting all of them simultaneously is not claimed).
    """
    if not edges:
        return []
    scale = compute_scale(tts)
    D = _path_constraints(graph, tts, edges, scale)
    _close_path(D)
    out = []
    for i in range(1, len(D)):
        lo_enc = D[0][i]  # tau_0 - tau_i <= c  =>  tau_i >= -c
        lo = Fraction(-(lo_enc >> 1), scale)
        hi_enc = D[i][0]
        hi = None if hi_enc >= INF_ENC else Fraction(hi_enc >> 1, scale)
        out.append((lo, hi))
    return out


def witness_schedule(graph, tts, edges: list[tuple[int, Optional[int], int]]
                     ) -> list[Fraction]:
    """One concrete firing schedule realizing the path, as absolute times.

    Fixes each time greedily at its earliest value, taking an interior point
    (rescaling the constraint grid when the midpoint falls between grid
    points) whenever the lower bound is strict and therefore unattained.
    """
    if not edges:
        return []
    scale = compute_scale(tts)
    D = _path_constraints(graph, tts, edges, scale)
    _close_path(D)
    n = len(D)
    mult = 1
    times: list[Fraction] = []
    for i in range(1, n):
        lo_e = D[0][i]
        if lo_e & 1:  # weak bound: the infimum is attained
            v = -(lo_e >> 1)
        else:
            a = -(lo_e >> 1)
            hi_e = D[i][0]
            if hi_e >= INF_ENC:
                v = a + 1
            else:
                b = hi_e >> 1
                if (a + b) % 2:
                    for row in D:
                        for c in range(n):
                            e = row[c]
                            if e < INF_ENC:
                                row[c] = ((e >> 1) << 2) | (e & 1)
                    mult *= 2
                    a, b = 2 * a, 2 * b
                v = (a + b) // 2
        times.append(Fraction(v, scale * mult))
        pin_up, pin_lo = enc(v, False), enc(-v, False)
        if pin_up < D[i][0]:
            D[i][0] = pin_up
        if pin_lo < D[0][i]:
            D[0][i] = pin_lo
        for piv in (i, 0):
            Dp = D[piv]
            for r in range(n):
                drp = D[r][piv]
                if drp >= INF_ENC:
                    continue
                Dr = D[r]
                for c in range(n):
                    alt = enc_add(drp, Dp[c])
                    if alt < Dr[c]:
                        Dr[c] = alt
        for r in range(n):
            if D[r][r] < 1:
                raise InfeasiblePath("witness schedule became inconsistent")
    return times


# ---------------------------------------------------------------------------
# Counterexample rendering


def _fmt_time(x: Optional[Fraction]) -> str:
    if x is None:
        return "inf"
    return str(x.numerator) if x.denominator == 1 else f"{x.numerator}/{x.denominator}"


def cex_text(cex: Counterexample, graph, tts) -> str:
    lines = []
    k = 0
    for part, steps in (("", cex.prefix), ("cycle", cex.cycle)):
        if part and steps:
            lines.append(f"-- cycle (repeats forever) --")
        for st in steps:
            k += 1
            ev = "(deadlock)" if st.tid is None else tts.event_name(st.tid)
            summary = graph.class_summary(st.dst)
            lines.append(
                f"#{k}  t=[{_fmt_time(st.earliest)},{_fmt_time(st.latest)}]  {ev}  ->  {summary}"
            )
    return "\n".join(lines)


def cex_json(cex: Counterexample, graph, tts) -> dict:
    def step_obj(st: Step):
        return {
            "event": "(deadlock)" if st.tid is None else tts.event_name(st.tid),
            "transition": st.tid,
            "t": [_fmt_time(st.earliest), _fmt_time(st.latest)],
            "src": st.src,
            "dst": st.dst,
            "class": graph.class_summary(st.dst),
        }

    return {
        "prefix": [step_obj(s) for s in cex.prefix],
        "cycle": [step_obj(s) for s in cex.cycle],
    }


def fired_sequence(cex: Counterexample, unroll_cycles: int = 2) -> list[int]:
    """Transition ids to replay: prefix plus a bounded cycle unrolling."""
    seq = [s.tid for s in cex.prefix if s.tid is not None]
    cyc = [s.tid for s in cex.cycle if s.tid is not None]
    for _ in range(unroll_cycles):
        seq.extend(cyc)
    return seq
