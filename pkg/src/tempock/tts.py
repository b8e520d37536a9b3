"""Flattens a well-formed program into a Timed Transition System.

Each from-block is unrolled into atomic transitions: statement paths are cut
at synchronization and wait boundaries, and the guards and updates between
two boundaries ride on the transition that closes the segment.  A port
labels an n-ary rendezvous of every instance bound to it; the transition
inherits the port's time interval intersected with any explicit waits, and
unconstrained internal steps default to [0,inf[.  Component priorities on
ports are lifted to all transitions carrying those labels, and the initial
transitions of unless branches dominate those of the plain branches of the
same select.

State layout: one slot per instance (location index), then one slot per
variable (shared first, then per-instance locals).  Variable values are
encoded as small ints: bool as 0/1, enumerations by declaration position,
integer ranges by value.
"""

from __future__ import annotations

import itertools
import operator
from dataclasses import dataclass
from typing import Callable, Optional

from tempock import model
from tempock.model import (
    Assign,
    BinOp,
    BoolLit,
    BoolType,
    DEFAULT_INTERVAL,
    EnumLit,
    EnumType,
    EventAtom,
    Expr,
    If,
    IntLit,
    IntRange,
    Loop,
    NondetAssign,
    Not,
    On,
    Program,
    Select,
    Seq,
    StateAtom,
    Stmt,
    Sync,
    TimeInterval,
    To,
    ValueAtom,
    Var,
    Wait,
    expr_str,
    seq_list,
)


class CompileError(Exception):
    pass


class DomainOverflow(CompileError):
    pass


class NotEnabled(Exception):
    pass


class DomainError(Exception):
    pass


@dataclass
class Transition:
    tid: int
    event: Optional[str]  # global port name; None for an internal step
    parts: tuple[tuple[int, int, int], ...]  # (slot, src_loc, tgt_loc)
    guard: Callable[[tuple], bool]
    update: Callable[[tuple], tuple]  # state -> tuple of successor states
    interval: TimeInterval
    pretty: str
    name: str
    # sealing: after this transition fires, everything else fires strictly
    # later; used by observers to separate boundary instants
    seal: bool = False


class Tts:
    """Flattened system: finite discrete states plus interval-timed transitions."""

    def __init__(self):
        self.program: Optional[Program] = None
        self.component: str = ""
        self.n_inst: int = 0
        self.instance_names: list[str] = []
        self.loc_names: list[list[str]] = []
        self.loc_index: list[dict[str, int]] = []
        self.var_names: list[str] = []
        self.var_pretty: list[Callable[[int], str]] = []
        self.inst_var_slots: list[dict[str, int]] = []
        self.enum_codes: dict[str, int] = {}
        self.binding: list[dict[str, str]] = []
        self.port_tids: dict[str, frozenset[int]] = {}
        self.transitions: list[Transition] = []
        self.dominators: list[int] = []  # per tid: bitmask of strictly dominating tids
        self.initial: tuple = ()

    @property
    def n_slots(self) -> int:
        return self.n_inst + len(self.var_names)

    # -- dynamics -----------------------------------------------------------

    def enabled_ids(self, state: tuple) -> tuple[int, ...]:
        out = []
        for t in self.transitions:
            ok = True
            for slot, src, _ in t.parts:
                if state[slot] != src:
                    ok = False
                    break
            if ok and t.guard(state):
                out.append(t.tid)
        return tuple(out)

    def fire(self, state: tuple, tid: int) -> tuple:
        t = self.transitions[tid]
        for slot, src, _ in t.parts:
            if state[slot] != src:
                raise NotEnabled(f"t{tid} ({t.name}): participant not in place")
        if not t.guard(state):
            raise NotEnabled(f"t{tid} ({t.name}): guard is false")
        return t.update(state)

    # -- observation --------------------------------------------------------

    def event_name(self, tid: int) -> str:
        return self.transitions[tid].name

    def event_tids(self, atom: EventAtom) -> frozenset[int]:
        if not (1 <= atom.instance <= self.n_inst):
            raise model.UnknownInstance(f"no instance {atom.instance}")
        bind = self.binding[atom.instance - 1]
        if atom.port not in bind:
            raise model.UnknownPort(
                f"instance {atom.instance} has no port {atom.port}"
            )
        return self.port_tids.get(bind[atom.port], frozenset())

    def value_slot(self, atom: ValueAtom) -> tuple[int, int]:
        """Absolute state slot of the variable plus the encoded constant."""
        if not (1 <= atom.instance <= self.n_inst):
            raise model.UnknownInstance(f"no instance {atom.instance}")
        slots = self.inst_var_slots[atom.instance - 1]
        if atom.var not in slots:
            raise model.IllTypedPredicate(
                f"instance {atom.instance} has no variable {atom.var}"
            )
        return slots[atom.var], self.encode_const(atom.const)

    def encode_const(self, const) -> int:
        if isinstance(const, bool):
            return int(const)
        if isinstance(const, int):
            return const
        if isinstance(const, str):
            if const in self.enum_codes:
                return self.enum_codes[const]
            raise model.IllTypedPredicate(f"unknown enumeration constant {const}")
        raise model.IllTypedPredicate(f"cannot encode constant {const!r}")

    _OPS = {"=": operator.eq, "<": operator.lt, "<=": operator.le,
            ">": operator.gt, ">=": operator.ge}

    def state_pred(self, atom) -> Callable[[tuple], bool]:
        if isinstance(atom, StateAtom):
            slot = atom.instance - 1
            if not (0 <= slot < self.n_inst):
                raise model.UnknownInstance(f"no instance {atom.instance}")
            loc = self.loc_index[slot].get(atom.state)
            if loc is None:
                raise model.UnknownState(
                    f"instance {atom.instance} has no state {atom.state}"
                )
            return lambda s, _slot=slot, _loc=loc: s[_slot] == _loc
        if isinstance(atom, ValueAtom):
            slot, enc = self.value_slot(atom)
            if atom.op not in self._OPS:
                raise model.IllTypedPredicate(f"unsupported comparison {atom.op}")
            cmp = self._OPS[atom.op]
            return lambda s, _slot=slot, _enc=enc, _cmp=cmp: _cmp(s[_slot], _enc)
        raise TypeError(f"not a state atom: {atom!r}")

    # -- reporting ----------------------------------------------------------

    def state_summary(self, state: tuple) -> str:
        bits = [
            f"{self.instance_names[i]}:{self.loc_names[i][state[i]]}"
            for i in range(self.n_inst)
        ]
        bits += [
            f"{self.var_names[j]}={self.var_pretty[j](state[self.n_inst + j])}"
            for j in range(len(self.var_names))
        ]
        return " ".join(bits)

    def loc_name(self, slot: int, loc: int) -> str:
        if slot < len(self.loc_names):
            return self.loc_names[slot][loc]
        return str(loc)

    def dump(self) -> str:
        lines = []
        for t in self.transitions:
            ev = t.event if t.event is not None else "tau"
            parts = ",".join(
                f"{self.instance_names[slot] if slot < self.n_inst else slot}"
                f":{self.loc_name(slot, src)}->{self.loc_name(slot, tgt)}"
                for slot, src, tgt in t.parts
            )
            dom = ""
            if self.dominators[t.tid]:
                above = [i for i in range(len(self.transitions))
                         if self.dominators[t.tid] >> i & 1]
                dom = " <" + ",".join(f"t{i}" for i in above)
            lines.append(f"t{t.tid} {ev} {t.interval} [{parts}] {t.pretty}{dom}")
        return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# Statement unrolling into instance-local edges


@dataclass
class _LocalEdge:
    src: str
    tgt: str
    port: Optional[str]  # formal port name
    wait: Optional[TimeInterval]
    alts: list[list[Stmt]]
    eid: int = -1


class _Chunk:
    """Accumulates the atoms between two transition boundaries."""

    def __init__(self):
        self.alts: list[list[Stmt]] = [[]]
        self.wait: Optional[TimeInterval] = None
        self.port: Optional[str] = None
        self.has_update = False

    def append(self, atom: Stmt):
        for a in self.alts:
            a.append(atom)
        if isinstance(atom, (Assign, NondetAssign)):
            self.has_update = True

    def extend_alts(self, expansion: list[list[Stmt]]):
        self.alts = [a + ext for a in self.alts for ext in expansion]
        if any(isinstance(x, (Assign, NondetAssign)) for ext in expansion for x in ext):
            self.has_update = True

    def copy(self) -> "_Chunk":
        c = _Chunk()
        c.alts = [list(a) for a in self.alts]
        c.wait = self.wait
        c.port = self.port
        c.has_update = self.has_update
        return c


def _simple_alts(items: list[Stmt]) -> Optional[list[list[Stmt]]]:
    """Expand nested conditionals into flat guard alternatives, or None when
    the statements contain control flow that cannot stay inside one chunk."""
    out: list[list[Stmt]] = [[]]
    for s in items:
        if isinstance(s, (On, Assign, NondetAssign)):
            out = [a + [s] for a in out]
        elif isinstance(s, Seq):
            sub = _simple_alts(seq_list(s))
            if sub is None:
                return None
            out = [a + b for a in out for b in sub]
        elif isinstance(s, If):
            then = _simple_alts(seq_list(s.then))
            if then is None:
                return None
            els = _simple_alts(seq_list(s.orelse)) if s.orelse is not None else [[]]
            if els is None:
                return None
            out = [a + [On(s.cond)] + b for a in out for b in then] + [
                a + [On(Not(s.cond))] + b for a in out for b in els
            ]
        else:
            return None
    return out


class _Unroller:
    def __init__(self, proc: model.ProcessDecl, where: str):
        self.proc = proc
        self.where = where
        self.edges: list[_LocalEdge] = []
        self.anon = 0
        self.locs: list[str] = list(proc.states)
        self.dominance: list[tuple[int, int]] = []  # (higher eid, lower eid)

    def run(self) -> "_Unroller":
        for state, block in self.proc.from_blocks:
            body = seq_list(block)
            if len(body) == 1 and isinstance(body[0], Select):
                self._select(state, body[0])
            else:
                self._walk(state, state, body, _Chunk())
        return self

    def _fresh(self, state: str) -> str:
        self.anon += 1
        name = f"{state}@{self.anon}"
        self.locs.append(name)
        return name

    def _emit(self, src: str, tgt: str, chunk: _Chunk) -> _LocalEdge:
        e = _LocalEdge(src=src, tgt=tgt, port=chunk.port, wait=chunk.wait,
                       alts=chunk.alts, eid=len(self.edges))
        self.edges.append(e)
        return e

    def _select(self, state: str, sel: Select):
        plain_first: list[int] = []
        for branch in sel.branches:
            start = len(self.edges)
            self._walk(state, state, seq_list(branch), _Chunk())
            plain_first += [e.eid for e in self.edges[start:] if e.src == state]
        for branch in sel.unless_branches:
            start = len(self.edges)
            self._walk(state, state, seq_list(branch), _Chunk())
            for hi in (e.eid for e in self.edges[start:] if e.src == state):
                for lo in plain_first:
                    self.dominance.append((hi, lo))

    def _walk(self, home: str, loc: str, items: list[Stmt], chunk: _Chunk):
        i = 0
        while i < len(items):
            s = items[i]
            if isinstance(s, (To, Loop)):
                if i + 1 < len(items):
                    raise CompileError(f"{self.where}: unreachable code after to/loop")
                self._emit(loc, home if isinstance(s, Loop) else s.state, chunk)
                return
            if isinstance(s, Sync):
                if chunk.port is not None or chunk.has_update:
                    nxt = self._fresh(home)
                    self._emit(loc, nxt, chunk)
                    loc, chunk = nxt, _Chunk()
                chunk.port = s.port
            elif isinstance(s, Wait):
                if chunk.wait is not None or chunk.port is not None or chunk.has_update:
                    nxt = self._fresh(home)
                    self._emit(loc, nxt, chunk)
                    loc, chunk = nxt, _Chunk()
                chunk.wait = s.interval
            elif isinstance(s, (On, Assign, NondetAssign)):
                chunk.append(s)
            elif isinstance(s, Seq):
                items = items[:i] + seq_list(s) + items[i + 1 :]
                continue
            elif isinstance(s, If):
                alts = _simple_alts([s])
                if alts is not None:
                    chunk.extend_alts(alts)
                else:
                    rest = items[i + 1 :]
                    then_items = seq_list(s.then)
                    # a branch that already ends in to/loop falls out of the
                    # block: the statements after the if belong only to the
                    # continuing branch
                    t_rest = [] if then_items and isinstance(
                        then_items[-1], (To, Loop)) else rest
                    self._walk(home, loc,
                               [On(s.cond)] + then_items + t_rest, chunk.copy())
                    orelse = seq_list(s.orelse) if s.orelse is not None else []
                    e_rest = [] if orelse and isinstance(
                        orelse[-1], (To, Loop)) else rest
                    self._walk(home, loc,
                               [On(Not(s.cond))] + orelse + e_rest, chunk.copy())
                    return
            elif isinstance(s, Select):
                raise CompileError(
                    f"{self.where}: select is only allowed as the whole body of a from-block"
                )
            else:
                raise CompileError(f"{self.where}: statement not supported: {s!r}")
            i += 1
        raise CompileError(f"{self.where}: statement path does not end in to/loop")


# ---------------------------------------------------------------------------
# Expression and chunk compilation


class _Scope:
    """Name resolution for one instance: variables to slots, constants to ints."""

    def __init__(self, var_slots: dict[str, int], consts: dict[str, int],
                 enum_codes: dict[str, int]):
        self.var_slots = var_slots
        self.consts = consts
        self.enum_codes = enum_codes

    def compile(self, e: Expr) -> Callable:
        if isinstance(e, IntLit):
            return lambda s, _v=e.value: _v
        if isinstance(e, BoolLit):
            return lambda s, _v=int(e.value): _v
        if isinstance(e, EnumLit):
            if e.value not in self.enum_codes:
                raise CompileError(f"unknown enumeration constant {e.value}")
            return lambda s, _v=self.enum_codes[e.value]: _v
        if isinstance(e, Var):
            if e.name in self.var_slots:
                return lambda s, _i=self.var_slots[e.name]: s[_i]
            if e.name in self.consts:
                return lambda s, _v=self.consts[e.name]: _v
            if e.name in self.enum_codes:
                return lambda s, _v=self.enum_codes[e.name]: _v
            raise CompileError(f"unbound name {e.name}")
        if isinstance(e, Not):
            f = self.compile(e.operand)
            return lambda s: 0 if f(s) else 1
        if isinstance(e, BinOp):
            lf, rf = self.compile(e.left), self.compile(e.right)
            op = e.op
            if op == "+":
                return lambda s: lf(s) + rf(s)
            if op == "-":
                return lambda s: lf(s) - rf(s)
            if op == "=":
                return lambda s: 1 if lf(s) == rf(s) else 0
            if op == "<>":
                return lambda s: 1 if lf(s) != rf(s) else 0
            if op == "<":
                return lambda s: 1 if lf(s) < rf(s) else 0
            if op == "<=":
                return lambda s: 1 if lf(s) <= rf(s) else 0
            if op == ">":
                return lambda s: 1 if lf(s) > rf(s) else 0
            if op == ">=":
                return lambda s: 1 if lf(s) >= rf(s) else 0
            if op == "and":
                return lambda s: 1 if lf(s) and rf(s) else 0
            if op == "or":
                return lambda s: 1 if lf(s) or rf(s) else 0
            raise CompileError(f"unknown operator {op}")
        raise CompileError(f"not an expression: {e!r}")


def _compile_alt(scope: _Scope, atoms: list[Stmt], dom_sets: dict[int, frozenset],
                 dom_values: dict[int, tuple]):
    """One alternative -> (guard, outcomes, pretty).

    guard(state) -> bool on the pre-state; outcomes(state) -> list of successor
    variable vectors as fresh lists (location moves are applied by the caller).
    """
    steps: list[tuple] = []
    pretty_bits: list[str] = []
    seen_update = False
    post_guard = False  # a guard after an update needs path simulation
    for a in atoms:
        if isinstance(a, On):
            fn = scope.compile(a.cond)
            steps.append(("on", fn))
            pretty_bits.append(f"on {expr_str(a.cond)}")
            if seen_update:
                post_guard = True
        elif isinstance(a, Assign):
            if a.var not in scope.var_slots:
                raise CompileError(f"assignment to unknown variable {a.var}")
            slot = scope.var_slots[a.var]
            steps.append(("set", slot, scope.compile(a.expr), dom_sets[slot]))
            pretty_bits.append(f"{a.var}:={expr_str(a.expr)}")
            seen_update = True
        elif isinstance(a, NondetAssign):
            if a.var not in scope.var_slots:
                raise CompileError(f"assignment to unknown variable {a.var}")
            slot = scope.var_slots[a.var]
            steps.append(("any", slot, dom_values[slot]))
            pretty_bits.append(f"{a.var}:=any")
            seen_update = True
        else:
            raise CompileError(f"unexpected atom in chunk: {a!r}")

    has_nondet = any(st[0] == "any" for st in steps)
    pretty = "; ".join(pretty_bits) if pretty_bits else "-"

    if not has_nondet and not post_guard:
        ons = tuple(st[1] for st in steps if st[0] == "on")
        sets = tuple(st[1:] for st in steps if st[0] == "set")

        def guard(s, _ons=ons):
            for f in _ons:
                if not f(s):
                    return False
            return True

        def outcomes(s, _sets=sets):
            out = list(s)
            for slot, fn, dom in _sets:
                v = fn(out)
                if v not in dom:
                    raise DomainError(f"value {v} outside the domain of slot {slot}")
                out[slot] = v
            return [out]

        return guard, outcomes, pretty

    all_steps = tuple(steps)

    def simulate(s, _steps=all_steps):
        branches = [list(s)]
        for st in _steps:
            kind = st[0]
            if kind == "on":
                fn = st[1]
                branches = [b for b in branches if fn(b)]
            elif kind == "set":
                _, slot, fn, dom = st
                for b in branches:
                    v = fn(b)
                    if v not in dom:
                        raise DomainError(
                            f"value {v} outside the domain of slot {slot}"
                        )
                    b[slot] = v
            else:
                _, slot, values = st
                nxt = []
                for b in branches:
                    for v in values:
                        nb = list(b)
                        nb[slot] = v
                        nxt.append(nb)
                branches = nxt
            if not branches:
                return []
        return branches

    return (lambda s: bool(simulate(s))), simulate, pretty


def intersect_intervals(a: TimeInterval, b: TimeInterval) -> TimeInterval:
    if b.lower > a.lower:
        lo, los = b.lower, b.lower_strict
    elif b.lower < a.lower:
        lo, los = a.lower, a.lower_strict
    else:
        lo, los = a.lower, a.lower_strict or b.lower_strict
    if a.upper is None:
        up, ups = b.upper, b.upper_strict
    elif b.upper is None:
        up, ups = a.upper, a.upper_strict
    elif a.upper < b.upper:
        up, ups = a.upper, a.upper_strict
    elif b.upper < a.upper:
        up, ups = b.upper, b.upper_strict
    else:
        up, ups = a.upper, a.upper_strict or b.upper_strict
    if up is not None and (lo > up or (lo == up and (los or ups))):
        raise CompileError(f"empty time interval: {a} intersected with {b}")
    if up is None:
        ups = True
    return TimeInterval(lo, up, los, ups)


# ---------------------------------------------------------------------------
# Whole-program compilation


def compile_program(program: Program, root: Optional[str] = None,
                    max_transitions: int = 10_000) -> Tts:
    comp = program.component(root or program.root)
    if comp is None:
        raise CompileError(f"no component named {root or program.root}")

    tts = Tts()
    tts.program = program
    tts.component = comp.name
    consts = {c.name: c.value for c in program.consts}

    # Enumeration codes: position within the declaring type.  Reused names
    # must agree on the position so the flat encoding stays unambiguous.
    enum_codes: dict[str, int] = {}

    def note_enum(dtype):
        rt = program.resolve_type(dtype)
        if isinstance(rt, EnumType):
            for i, v in enumerate(rt.values):
                if enum_codes.setdefault(v, i) != i:
                    raise CompileError(
                        f"enumeration constant {v} has conflicting positions"
                    )
        return rt

    for td in program.type_decls:
        note_enum(td.dtype)

    procs: list[model.ProcessDecl] = []
    for inst in comp.instances:
        proc = program.process(inst.target)
        if proc is None:
            if program.component(inst.target) is not None:
                raise CompileError(
                    f"nested component {inst.target} is not supported"
                )
            raise CompileError(f"unknown process {inst.target}")
        procs.append(proc)

    n = len(procs)
    tts.n_inst = n
    tts.instance_names = [
        inst.label or f"{i + 1}" for i, inst in enumerate(comp.instances)
    ]

    # -- variable slots: component shared variables, then per-instance locals
    var_names: list[str] = []
    var_domains: list[tuple] = []  # encoded value tuples
    var_init: list[int] = []
    var_pretty: list[Callable[[int], str]] = []
    shared_slot: dict[str, int] = {}

    def encoded_domain(rt) -> tuple:
        if isinstance(rt, BoolType):
            return (0, 1)
        if isinstance(rt, IntRange):
            return tuple(range(rt.lo, rt.hi + 1))
        if isinstance(rt, EnumType):
            return tuple(range(len(rt.values)))
        raise CompileError(f"variables must have a finite type, got {rt}")

    def pretty_fn(rt) -> Callable[[int], str]:
        if isinstance(rt, BoolType):
            return lambda v: "true" if v else "false"
        if isinstance(rt, EnumType):
            return lambda v, _n=rt.values: _n[v] if 0 <= v < len(_n) else str(v)
        return str

    def eval_const_expr(e: Expr) -> int:
        return _Scope({}, consts, enum_codes).compile(e)(())

    for sv in comp.shared_vars:
        rt = note_enum(sv.dtype)
        shared_slot[sv.name] = n + len(var_names)
        var_names.append(sv.name)
        var_domains.append(encoded_domain(rt))
        var_pretty.append(pretty_fn(rt))
        v = eval_const_expr(sv.init)
        if isinstance(rt, BoolType):
            v = int(bool(v))
        if v not in var_domains[-1]:
            raise CompileError(f"initial value of {sv.name} outside its domain")
        var_init.append(v)

    inst_var_slots: list[dict[str, int]] = []
    for i, (inst, proc) in enumerate(zip(comp.instances, procs)):
        slots: dict[str, int] = {}
        if len(inst.var_args) != len(proc.var_params):
            raise CompileError(
                f"{proc.name}: expected {len(proc.var_params)} shared arguments, "
                f"got {len(inst.var_args)}"
            )
        for vp, arg in zip(proc.var_params, inst.var_args):
            note_enum(vp.dtype)
            if arg not in shared_slot:
                raise CompileError(f"{proc.name}: unknown shared variable {arg}")
            slots[vp.name] = shared_slot[arg]
        for lv in proc.locals:
            rt = note_enum(lv.dtype)
            slots[lv.name] = n + len(var_names)
            var_names.append(f"{tts.instance_names[i]}.{lv.name}")
            var_domains.append(encoded_domain(rt))
            var_pretty.append(pretty_fn(rt))
            if lv.init is not None:
                v = eval_const_expr(lv.init)
                if isinstance(rt, BoolType):
                    v = int(bool(v))
            else:
                v = var_domains[-1][0]
            if v not in var_domains[-1]:
                raise CompileError(
                    f"initial value of {proc.name}.{lv.name} outside its domain"
                )
            var_init.append(v)
        inst_var_slots.append(slots)

    tts.var_names = var_names
    tts.var_pretty = var_pretty
    tts.inst_var_slots = inst_var_slots
    tts.enum_codes = enum_codes
    dom_sets = {n + j: frozenset(var_domains[j]) for j in range(len(var_names))}
    dom_values = {n + j: var_domains[j] for j in range(len(var_names))}

    # -- unroll instances and fix the initial state
    unrollers: list[_Unroller] = []
    init_locs: list[str] = []
    init_vars = list(var_init)
    scopes: list[_Scope] = []
    for i, proc in enumerate(procs):
        where = f"{proc.name}({tts.instance_names[i]})"
        u = _Unroller(proc, where).run()
        unrollers.append(u)
        tts.loc_names.append(list(u.locs))
        tts.loc_index.append({name: k for k, name in enumerate(u.locs)})
        scope = _Scope(inst_var_slots[i], consts, enum_codes)
        scopes.append(scope)
        loc0 = proc.states[0]
        if proc.init_stmt is not None:
            dummy = [0] * n + init_vars
            for st in seq_list(proc.init_stmt):
                if isinstance(st, Assign):
                    if st.var not in inst_var_slots[i]:
                        raise CompileError(
                            f"{where}: init assigns unknown variable {st.var}"
                        )
                    slot = inst_var_slots[i][st.var]
                    v = scope.compile(st.expr)(dummy)
                    if v not in dom_sets[slot]:
                        raise CompileError(
                            f"{where}: init value for {st.var} outside its domain"
                        )
                    dummy[slot] = v
                elif isinstance(st, To):
                    loc0 = st.state
                else:
                    raise CompileError(
                        f"{where}: init must be assignments followed by to"
                    )
            init_vars = dummy[n:]
        if loc0 not in tts.loc_index[i]:
            raise CompileError(f"{where}: unknown initial state {loc0}")
        init_locs.append(loc0)
    tts.initial = tuple(
        tts.loc_index[i][init_locs[i]] for i in range(n)
    ) + tuple(init_vars)

    # -- port bindings
    for inst, proc in zip(comp.instances, procs):
        if len(inst.port_args) != len(proc.port_params):
            raise CompileError(
                f"{proc.name}: expected {len(proc.port_params)} port arguments, "
                f"got {len(inst.port_args)}"
            )
        bind = {}
        for pp, arg in zip(proc.port_params, inst.port_args):
            if comp.port(arg) is None:
                raise CompileError(f"component {comp.name} has no port {arg}")
            bind[pp.name] = arg
        tts.binding.append(bind)

    # pre-compile every alternative of every local edge
    compiled: list[list[list[tuple]]] = []
    for i, u in enumerate(unrollers):
        compiled.append(
            [[_compile_alt(scopes[i], alt, dom_sets, dom_values) for alt in e.alts]
             for e in u.edges]
        )

    edge_tids: dict[tuple[int, int], list[int]] = {}

    def emit(event, members, interval):
        """members: list of (instance, edge, compiled-alt)."""
        if len(tts.transitions) >= max_transitions:
            raise DomainOverflow(
                f"more than {max_transitions} transitions; "
                "the model is outside the tractable fragment"
            )
        tid = len(tts.transitions)
        parts = tuple(
            (i, tts.loc_index[i][e.src], tts.loc_index[i][e.tgt])
            for i, e, _ in members
        )
        guards = tuple(c[0] for _, _, c in members)
        outfns = tuple(c[1] for _, _, c in members)

        if len(members) == 1:
            g0, o0 = guards[0], outfns[0]

            def guard(s, _g=g0):
                return bool(_g(s))

            def update(s, _o=o0, _parts=parts):
                outs = []
                for b in _o(s):
                    for slot, _, tgt in _parts:
                        b[slot] = tgt
                    outs.append(tuple(b))
                if not outs:
                    raise NotEnabled("no feasible outcome")
                return tuple(dict.fromkeys(outs))

        else:

            def guard(s, _gs=guards):
                return all(g(s) for g in _gs)

            def update(s, _os=outfns, _parts=parts):
                branches = [list(s)]
                for f in _os:
                    branches = [b2 for b in branches for b2 in f(b)]
                outs = []
                for b in branches:
                    for slot, _, tgt in _parts:
                        b[slot] = tgt
                    outs.append(tuple(b))
                if not outs:
                    raise NotEnabled("no feasible outcome")
                return tuple(dict.fromkeys(outs))

        bits = []
        for i, e, c in members:
            move = f"{tts.instance_names[i]}:{e.src}->{e.tgt}"
            bits.append(move if c[2] == "-" else f"{move}({c[2]})")
        pretty = " ".join(bits)
        if event is not None:
            name = event
        else:
            i0, e0, _ = members[0]
            name = f"tau:{tts.instance_names[i0]}.{e0.src}"
        tts.transitions.append(
            Transition(tid=tid, event=event, parts=parts, guard=guard,
                       update=update, interval=interval, pretty=pretty, name=name)
        )
        for i, e, _ in members:
            edge_tids.setdefault((i, e.eid), []).append(tid)
        return tid

    # internal transitions, in instance order
    for i, u in enumerate(unrollers):
        for e in u.edges:
            if e.port is not None:
                continue
            interval = e.wait if e.wait is not None else DEFAULT_INTERVAL
            for c in compiled[i][e.eid]:
                emit(None, [(i, e, c)], interval)

    # rendezvous per component port, in declaration order
    port_tids: dict[str, set[int]] = {}
    for pd in comp.ports:
        g = pd.name
        offers: list[tuple[int, list[_LocalEdge]]] = []
        for i, u in enumerate(unrollers):
            bind = tts.binding[i]
            if not any(actual == g for actual in bind.values()):
                continue
            mine = [e for e in u.edges
                    if e.port is not None and bind.get(e.port) == g]
            offers.append((i, mine))
        if not offers or any(not mine for _, mine in offers):
            continue
        tids = port_tids.setdefault(g, set())
        for combo in itertools.product(*(mine for _, mine in offers)):
            interval = pd.interval
            for e in combo:
                if e.wait is not None:
                    interval = intersect_intervals(interval, e.wait)
            alt_sets = [
                [(i, e, c) for c in compiled[i][e.eid]]
                for (i, _), e in zip(offers, combo)
            ]
            for members in itertools.product(*alt_sets):
                tids.add(emit(g, list(members), interval))
    tts.port_tids = {g: frozenset(ts) for g, ts in port_tids.items()}

    # -- priorities: component port pairs plus unless dominance
    pairs: set[tuple[int, int]] = set()
    for hi, lo in model.priority_closure(comp.priorities):
        for ht in tts.port_tids.get(hi, ()):
            for lt in tts.port_tids.get(lo, ()):
                pairs.add((ht, lt))
    for i, u in enumerate(unrollers):
        for hi_e, lo_e in u.dominance:
            for ht in edge_tids.get((i, hi_e), ()):
                for lt in edge_tids.get((i, lo_e), ()):
                    pairs.add((ht, lt))

    tts.dominators = close_dominators(len(tts.transitions), pairs)
    # exactness condition of the analysis: a higher-priority transition must
    # have a point interval, so its firing time pins down its release instant
    for mask in tts.dominators:
        k = 0
        while mask:
            if mask & 1:
                iv = tts.transitions[k].interval
                if iv.upper is None or iv.upper != iv.lower:
                    raise CompileError(
                        f"higher-priority transition {tts.transitions[k].name} "
                        f"must have a point interval, not {iv}"
                    )
            mask >>= 1
            k += 1
    return tts


def close_dominators(n: int, pairs: set[tuple[int, int]]) -> list[int]:
    """Per transition: bitmask of everything transitively dominating it."""
    above: dict[int, set[int]] = {}
    for ht, lt in pairs:
        above.setdefault(lt, set()).add(ht)
    closed: dict[int, int] = {}
    visiting: set[int] = set()

    def close(t: int) -> int:
        if t in closed:
            return closed[t]
        if t in visiting:
            raise CompileError("priority cycle across transitions")
        visiting.add(t)
        mask = 0
        for h in above.get(t, ()):
            mask |= (1 << h) | close(h)
        visiting.discard(t)
        closed[t] = mask
        return mask

    return [close(t) for t in range(n)]
