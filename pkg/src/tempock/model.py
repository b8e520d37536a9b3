"""Abstract syntax of the specification language and well-formedness checking.

Programs are stratified into processes (sequential state machines with local
variables and port synchronizations) and components (which instantiate
processes, attach time intervals to ports, and declare port priorities).
All data domains are finite so the flattened system is finite-state.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional, Union


# ---------------------------------------------------------------------------
# Source positions (excluded from AST equality)


@dataclass(frozen=True)
class SourceSpan:
    file: str
    start_line: int
    start_col: int
    end_line: int
    end_col: int

    def __str__(self) -> str:
        return f"{self.file}:{self.start_line}:{self.start_col}"


def _span_field():
    return field(default=None, compare=False, repr=False)


# ---------------------------------------------------------------------------
# Time intervals


@dataclass(frozen=True)
class TimeInterval:
    """[lower, upper] with per-bound strictness; upper None means unbounded."""

    lower: Fraction
    upper: Optional[Fraction]
    lower_strict: bool = False
    upper_strict: bool = False

    def __post_init__(self):
        object.__setattr__(self, "lower", Fraction(self.lower))
        if self.upper is not None:
            object.__setattr__(self, "upper", Fraction(self.upper))
        if self.lower < 0:
            raise ValueError("interval lower bound must be nonnegative")
        if self.upper is None:
            # normalized: an unbounded upper end is always open
            object.__setattr__(self, "upper_strict", True)
        else:
            if self.lower > self.upper:
                raise ValueError("interval lower bound exceeds upper bound")
            if self.lower == self.upper and (self.lower_strict or self.upper_strict):
                raise ValueError("empty interval: point interval must be closed")

    def __str__(self) -> str:
        lo = "]" if self.lower_strict else "["
        if self.upper is None:
            return f"{lo}{_fmt_frac(self.lower)},inf["
        hi = "[" if self.upper_strict else "]"
        return f"{lo}{_fmt_frac(self.lower)},{_fmt_frac(self.upper)}{hi}"

    def contains(self, v: Fraction) -> bool:
        if self.lower_strict:
            if v <= self.lower:
                return False
        elif v < self.lower:
            return False
        if self.upper is None:
            return True
        if self.upper_strict:
            return v < self.upper
        return v <= self.upper


def _fmt_frac(f: Fraction) -> str:
    return str(f.numerator) if f.denominator == 1 else f"{f.numerator}/{f.denominator}"


ZERO_INTERVAL = TimeInterval(Fraction(0), Fraction(0))
DEFAULT_INTERVAL = TimeInterval(Fraction(0), None)


# ---------------------------------------------------------------------------
# Data types


@dataclass(frozen=True)
class BoolType:
    def __str__(self):
        return "bool"


@dataclass(frozen=True)
class IntRange:
    lo: int
    hi: int

    def __post_init__(self):
        if self.lo > self.hi:
            raise ValueError("int range lower bound exceeds upper bound")

    def __str__(self):
        return f"{self.lo}..{self.hi}"


@dataclass(frozen=True)
class EnumType:
    name: str
    values: tuple[str, ...]

    def __str__(self):
        return self.name


@dataclass(frozen=True)
class NamedType:
    """Reference to a declared type, resolved during well-formedness."""

    name: str

    def __str__(self):
        return self.name


DataType = Union[BoolType, IntRange, EnumType, NamedType]


def type_domain(t: DataType) -> tuple:
    """Enumerate the finite value domain of a resolved type."""
    if isinstance(t, BoolType):
        return (False, True)
    if isinstance(t, IntRange):
        return tuple(range(t.lo, t.hi + 1))
    if isinstance(t, EnumType):
        return t.values
    raise TypeError(f"unresolved type {t}")


# ---------------------------------------------------------------------------
# Expressions


@dataclass(frozen=True)
class IntLit:
    value: int


@dataclass(frozen=True)
class BoolLit:
    value: bool


@dataclass(frozen=True)
class EnumLit:
    value: str


@dataclass(frozen=True)
class Var:
    name: str


@dataclass(frozen=True)
class BinOp:
    op: str  # + - = < <= > >= and or
    left: "Expr"
    right: "Expr"


@dataclass(frozen=True)
class Not:
    operand: "Expr"


Expr = Union[IntLit, BoolLit, EnumLit, Var, BinOp, Not]

_CMP_OPS = {"=", "<", "<=", ">", ">="}
_ARITH_OPS = {"+", "-"}
_BOOL_OPS = {"and", "or"}


def expr_str(e: Expr) -> str:
    if isinstance(e, IntLit):
        return str(e.value)
    if isinstance(e, BoolLit):
        return "true" if e.value else "false"
    if isinstance(e, EnumLit):
        return e.value
    if isinstance(e, Var):
        return e.name
    if isinstance(e, Not):
        # Outer parens keep the rendering re-parseable below a comparison.
        return f"(not {expr_str(e.operand)})"
    if isinstance(e, BinOp):
        return f"({expr_str(e.left)} {e.op} {expr_str(e.right)})"
    raise TypeError(f"not an expression: {e!r}")


def expr_vars(e: Expr) -> set[str]:
    if isinstance(e, Var):
        return {e.name}
    if isinstance(e, Not):
        return expr_vars(e.operand)
    if isinstance(e, BinOp):
        return expr_vars(e.left) | expr_vars(e.right)
    return set()


# ---------------------------------------------------------------------------
# Statements


@dataclass(frozen=True)
class To:
    state: str
    span: Optional[SourceSpan] = _span_field()


@dataclass(frozen=True)
class Loop:
    span: Optional[SourceSpan] = _span_field()


@dataclass(frozen=True)
class Sync:
    port: str
    span: Optional[SourceSpan] = _span_field()


@dataclass(frozen=True)
class Assign:
    var: str
    expr: Expr
    span: Optional[SourceSpan] = _span_field()


@dataclass(frozen=True)
class NondetAssign:
    """var := any — nondeterministic choice over the variable's domain."""

    var: str
    span: Optional[SourceSpan] = _span_field()


@dataclass(frozen=True)
class Wait:
    interval: TimeInterval
    span: Optional[SourceSpan] = _span_field()


@dataclass(frozen=True)
class On:
    """Guard: the enclosing transition may fire only if cond holds here."""

    cond: Expr
    span: Optional[SourceSpan] = _span_field()


@dataclass(frozen=True)
class Seq:
    stmts: tuple["Stmt", ...]
    span: Optional[SourceSpan] = _span_field()


@dataclass(frozen=True)
class If:
    cond: Expr
    then: "Stmt"
    orelse: Optional["Stmt"]
    span: Optional[SourceSpan] = _span_field()


@dataclass(frozen=True)
class Select:
    branches: tuple["Stmt", ...]
    unless_branches: tuple["Stmt", ...] = ()
    span: Optional[SourceSpan] = _span_field()


Stmt = Union[To, Loop, Sync, Assign, NondetAssign, Wait, On, Seq, If, Select]


def seq_list(s: Stmt) -> list[Stmt]:
    if isinstance(s, Seq):
        out: list[Stmt] = []
        for sub in s.stmts:
            out.extend(seq_list(sub))
        return out
    return [s]


# ---------------------------------------------------------------------------
# Declarations


@dataclass(frozen=True)
class ConstDecl:
    name: str
    value: int
    span: Optional[SourceSpan] = _span_field()


@dataclass(frozen=True)
class TypeDecl:
    name: str
    dtype: DataType
    span: Optional[SourceSpan] = _span_field()


@dataclass(frozen=True)
class PortParam:
    name: str
    ptype: str = "none"


@dataclass(frozen=True)
class VarParam:
    name: str
    dtype: DataType
    mode: str = "rw"  # shared (&) parameters; value parameters are out of subset


@dataclass(frozen=True)
class LocalVar:
    name: str
    dtype: DataType
    init: Optional[Expr]


@dataclass(frozen=True)
class ProcessDecl:
    name: str
    port_params: tuple[PortParam, ...]
    var_params: tuple[VarParam, ...]
    states: tuple[str, ...]
    locals: tuple[LocalVar, ...]
    init_stmt: Optional[Stmt]
    from_blocks: tuple[tuple[str, Stmt], ...]
    span: Optional[SourceSpan] = _span_field()

    def from_block(self, state: str) -> Optional[Stmt]:
        for s, b in self.from_blocks:
            if s == state:
                return b
        return None


@dataclass(frozen=True)
class PortDecl:
    name: str
    ptype: str
    interval: TimeInterval


@dataclass(frozen=True)
class SharedVar:
    name: str
    dtype: DataType
    init: Expr


@dataclass(frozen=True)
class Instance:
    target: str
    port_args: tuple[str, ...]
    var_args: tuple[str, ...] = ()
    label: Optional[str] = None


@dataclass(frozen=True)
class ComponentDecl:
    name: str
    ports: tuple[PortDecl, ...]
    shared_vars: tuple[SharedVar, ...]
    priorities: tuple[tuple[str, str], ...]  # (higher, lower)
    instances: tuple[Instance, ...]
    span: Optional[SourceSpan] = _span_field()

    def port(self, name: str) -> Optional[PortDecl]:
        for p in self.ports:
            if p.name == name:
                return p
        return None


@dataclass(frozen=True)
class PropertyDecl:
    name: str
    body: object  # Pattern (tempock.patterns) or Formula wrapper
    span: Optional[SourceSpan] = _span_field()


@dataclass(frozen=True)
class Program:
    consts: tuple[ConstDecl, ...] = ()
    type_decls: tuple[TypeDecl, ...] = ()
    processes: tuple[ProcessDecl, ...] = ()
    components: tuple[ComponentDecl, ...] = ()
    properties: tuple[PropertyDecl, ...] = ()
    root: str = "main"

    def process(self, name: str) -> Optional[ProcessDecl]:
        for p in self.processes:
            if p.name == name:
                return p
        return None

    def component(self, name: str) -> Optional[ComponentDecl]:
        for c in self.components:
            if c.name == name:
                return c
        return None

    def root_component(self) -> Optional[ComponentDecl]:
        return self.component(self.root)

    def const_value(self, name: str) -> Optional[int]:
        for c in self.consts:
            if c.name == name:
                return c.value
        return None

    def resolve_type(self, t: DataType) -> DataType:
        seen = set()
        while isinstance(t, NamedType):
            if t.name in seen:
                raise ValueError(f"cyclic type reference {t.name}")
            seen.add(t.name)
            for td in self.type_decls:
                if td.name == t.name:
                    t = td.dtype
                    break
            else:
                raise KeyError(t.name)
        return t


# ---------------------------------------------------------------------------
# Observable atoms (resolved against the root component's instance tree)


@dataclass(frozen=True)
class EventAtom:
    instance: int  # 1-based index
    port: str  # the process's formal port name

    def __str__(self):
        return f"{self.instance}/event {self.port}"


@dataclass(frozen=True)
class StateAtom:
    instance: int
    state: str

    def __str__(self):
        return f"{self.instance}/state {self.state}"


@dataclass(frozen=True)
class ValueAtom:
    instance: int
    var: str
    op: str
    const: object  # int | bool | enum value name

    def __str__(self):
        c = self.const
        if isinstance(c, bool):
            c = "true" if c else "false"
        return f"{self.instance}/value ({self.var} {self.op} {c})"


@dataclass(frozen=True)
class StartAtom:
    instance: int

    def __str__(self):
        return f"{self.instance}/start"


@dataclass(frozen=True)
class DeadAtom:
    def __str__(self):
        return "dead"


Atom = Union[EventAtom, StateAtom, ValueAtom, StartAtom, DeadAtom]


@dataclass(frozen=True)
class ObservablePath:
    """Syntactic instance path before resolution.

    segments: e.g. ("main", 1) or ("t",); kind: event|state|value|start;
    arg: port/state name, or (var, op, Expr) for value predicates.
    """

    segments: tuple[object, ...]
    kind: str
    arg: object = None

    def __str__(self):
        pre = "/".join(str(s) for s in self.segments)
        if self.kind == "event":
            return f"{pre}/event {self.arg}"
        if self.kind == "state":
            return f"{pre}/state {self.arg}"
        if self.kind == "value":
            var, op, e = self.arg
            return f"{pre}/value ({var} {op} {expr_str(e)})"
        return f"{pre}/start"


class ResolveError(Exception):
    pass


class UnknownInstance(ResolveError):
    pass


class UnknownPort(ResolveError):
    pass


class UnknownState(ResolveError):
    pass


class IllTypedPredicate(ResolveError):
    pass


# ---------------------------------------------------------------------------
# Well-formedness


@dataclass(frozen=True)
class Diagnostic:
    loc: str
    message: str

    def __str__(self):
        return f"{self.loc}: {self.message}"


def check_wellformed(p: Program) -> list[Diagnostic]:
    """Return every invariant violation; an empty list means well-formed."""
    diags: list[Diagnostic] = []

    def err(loc: str, msg: str):
        diags.append(Diagnostic(loc, msg))

    _check_unique_names(p, err)
    type_env_ok = _check_types(p, err)
    for proc in p.processes:
        _check_process(p, proc, err, type_env_ok)
    for comp in p.components:
        _check_component(p, comp, err, type_env_ok)
    if p.root_component() is None:
        err(p.root, "missing root component")
    # diagnostics are already appended in declaration order, which is the
    # deterministic source order
    return diags


def _check_unique_names(p: Program, err):
    for kind, decls in (
        ("const", p.consts),
        ("type", p.type_decls),
        ("process", p.processes),
        ("component", p.components),
        ("property", p.properties),
    ):
        seen: set[str] = set()
        for d in decls:
            if d.name in seen:
                err(d.name, f"duplicate {kind} name {d.name}")
            seen.add(d.name)


def _check_types(p: Program, err) -> bool:
    ok = True
    for td in p.type_decls:
        try:
            p.resolve_type(NamedType(td.name))
        except (KeyError, ValueError) as e:
            err(td.name, f"unresolvable type: {e}")
            ok = False
    return ok


def _resolved(p: Program, t: DataType):
    return p.resolve_type(t) if isinstance(t, NamedType) else t


class _TypeEnv:
    """Maps variable names to resolved types within one process."""

    def __init__(self, p: Program, proc: ProcessDecl):
        self.vars: dict[str, DataType] = {}
        for vp in proc.var_params:
            self.vars[vp.name] = _resolved(p, vp.dtype)
        for lv in proc.locals:
            self.vars[lv.name] = _resolved(p, lv.dtype)
        self.enum_values: dict[str, EnumType] = {}
        for td in p.type_decls:
            rt = _resolved(p, td.dtype)
            if isinstance(rt, EnumType):
                for v in rt.values:
                    self.enum_values[v] = rt

    def type_of(self, e: Expr) -> Optional[DataType]:
        """Resolved type, or None if ill-typed."""
        if isinstance(e, IntLit):
            return IntRange(e.value, e.value)
        if isinstance(e, BoolLit):
            return BoolType()
        if isinstance(e, EnumLit):
            return self.enum_values.get(e.value)
        if isinstance(e, Var):
            if e.name in self.vars:
                return self.vars[e.name]
            if e.name in self.enum_values:
                return self.enum_values[e.name]
            return None
        if isinstance(e, Not):
            return BoolType() if isinstance(self.type_of(e.operand), BoolType) else None
        if isinstance(e, BinOp):
            lt, rt = self.type_of(e.left), self.type_of(e.right)
            if lt is None or rt is None:
                return None
            if e.op in _BOOL_OPS:
                return BoolType() if isinstance(lt, BoolType) and isinstance(rt, BoolType) else None
            if e.op in _ARITH_OPS:
                if isinstance(lt, IntRange) and isinstance(rt, IntRange):
                    return IntRange(min(lt.lo, rt.lo), max(lt.hi, rt.hi))
                return None
            if e.op in _CMP_OPS:
                return BoolType() if _comparable(lt, rt, e.op) else None
            return None
        return None


def _comparable(lt: DataType, rt: DataType, op: str) -> bool:
    if isinstance(lt, IntRange) and isinstance(rt, IntRange):
        return True
    if op == "=":
        if isinstance(lt, BoolType) and isinstance(rt, BoolType):
            return True
        if isinstance(lt, EnumType) and isinstance(rt, EnumType):
            return lt.values == rt.values
    return False


def _check_process(p: Program, proc: ProcessDecl, err, types_ok: bool):
    loc = f"process {proc.name}"
    states = set(proc.states)
    if not proc.states:
        err(loc, "process declares no states")
    env = _TypeEnv(p, proc) if types_ok else None
    for lv in proc.locals:
        if lv.init is not None:
            free = expr_vars(lv.init)
            enum_ok = {v for v in free if env and v in env.enum_values}
            if free - enum_ok:
                err(loc, f"local {lv.name} initializer is not a closed expression")
            if env is not None:
                it = env.type_of(_close_enum(lv.init, env))
                dt = _resolved(p, lv.dtype)
                if it is None or not _assignable(dt, it):
                    err(loc, f"local {lv.name} initializer has the wrong type")
    known_from: set[str] = set()
    for state, block in proc.from_blocks:
        if state not in states:
            err(loc, f"from-block for undeclared state {state}")
        if state in known_from:
            err(loc, f"duplicate from-block for state {state}")
        known_from.add(state)
        _check_stmt(p, proc, block, states, env, err, f"{loc}/from {state}", toplevel=True)
    if proc.init_stmt is not None:
        for s in seq_list(proc.init_stmt):
            if not isinstance(s, (Assign, To)):
                err(loc, "init statement may contain only assignments and a final to")
        tail = seq_list(proc.init_stmt)[-1]
        if not isinstance(tail, To):
            err(loc, "init statement must end in to")
        elif tail.state not in states:
            err(loc, f"init targets undeclared state {tail.state}")


def _close_enum(e: Expr, env: _TypeEnv) -> Expr:
    """Rewrite free Vars that are enum constants into EnumLit."""
    if isinstance(e, Var) and e.name not in env.vars and e.name in env.enum_values:
        return EnumLit(e.name)
    if isinstance(e, Not):
        return Not(_close_enum(e.operand, env))
    if isinstance(e, BinOp):
        return BinOp(e.op, _close_enum(e.left, env), _close_enum(e.right, env))
    return e


def _assignable(var_t: DataType, val_t: DataType) -> bool:
    if isinstance(var_t, IntRange) and isinstance(val_t, IntRange):
        return True  # range membership is a dynamic domain check
    if isinstance(var_t, BoolType) and isinstance(val_t, BoolType):
        return True
    if isinstance(var_t, EnumType) and isinstance(val_t, EnumType):
        return var_t.values == val_t.values
    return False


def _check_stmt(p, proc, stmt, states, env, err, loc, toplevel=False):
    """Check one from-block body: path termination, targets, typing."""

    port_names = {pp.name for pp in proc.port_params}

    def check_expr_bool(e: Expr, where: str):
        if env is None:
            return
        t = env.type_of(_close_enum(e, env))
        if not isinstance(t, BoolType):
            err(loc, f"{where}: condition is not boolean")

    def walk(s: Stmt, *, can_branch: bool) -> bool:
        """Returns True iff every path through s ends in To/Loop."""
        if isinstance(s, Seq):
            items = seq_list(s)
            for i, sub in enumerate(items):
                last = i == len(items) - 1
                ended = walk(sub, can_branch=can_branch and last)
                if ended and not last:
                    err(loc, "unreachable statements after to/loop")
                    return True
                if ended:
                    return True
            return False
        if isinstance(s, (To, Loop)):
            if isinstance(s, To) and s.state not in states:
                err(loc, f"to targets undeclared state {s.state}")
            return True
        if isinstance(s, Sync):
            if s.port not in port_names:
                err(loc, f"sync on undeclared port {s.port}")
            return False
        if isinstance(s, Assign):
            if env is not None:
                if s.var not in env.vars:
                    err(loc, f"assignment to undeclared variable {s.var}")
                else:
                    t = env.type_of(_close_enum(s.expr, env))
                    if t is None or not _assignable(env.vars[s.var], t):
                        err(loc, f"ill-typed assignment to {s.var}")
            return False
        if isinstance(s, NondetAssign):
            if env is not None and s.var not in env.vars:
                err(loc, f"assignment to undeclared variable {s.var}")
            return False
        if isinstance(s, Wait):
            return False
        if isinstance(s, On):
            check_expr_bool(s.cond, "on")
            return False
        if isinstance(s, If):
            check_expr_bool(s.cond, "if")
            t_ends = walk(s.then, can_branch=False)
            e_ends = walk(s.orelse, can_branch=False) if s.orelse is not None else False
            if t_ends != e_ends and s.orelse is not None:
                err(loc, "if branches must both end or both continue")
            return t_ends and (s.orelse is not None and e_ends)
        if isinstance(s, Select):
            if not can_branch:
                err(loc, "select is only allowed as the whole body of a from-block")
            if not s.branches:
                err(loc, "select needs at least one branch")
            for b in list(s.branches) + list(s.unless_branches):
                if not walk(b, can_branch=False):
                    err(loc, "select branch does not end in to/loop")
            return True
        raise TypeError(f"not a statement: {s!r}")

    if not walk(stmt, can_branch=toplevel):
        err(loc, "statement path does not end in to/loop")


def _check_component(p: Program, comp: ComponentDecl, err, types_ok: bool):
    loc = f"component {comp.name}"
    port_names = set()
    for pd in comp.ports:
        if pd.name in port_names:
            err(loc, f"duplicate port {pd.name}")
        port_names.add(pd.name)
    for hi, lo_ in comp.priorities:
        for name in (hi, lo_):
            if name not in port_names:
                err(loc, f"priority names undeclared port {name}")
    cyc = _priority_cycle(comp.priorities)
    if cyc:
        err(loc, f"priority cycle through {cyc}")
    shared = {sv.name for sv in comp.shared_vars}
    for idx, inst in enumerate(comp.instances, start=1):
        iloc = f"{loc}/{idx}"
        proc = p.process(inst.target)
        if proc is None:
            if p.component(inst.target) is not None:
                err(iloc, "nested component instantiation is not in subset")
            else:
                err(iloc, f"unknown process {inst.target}")
            continue
        if len(inst.port_args) != len(proc.port_params):
            err(iloc, f"expected {len(proc.port_params)} port arguments, got {len(inst.port_args)}")
        for a in inst.port_args:
            if a not in port_names:
                err(iloc, f"port argument {a} is not a declared port")
        if len(inst.var_args) != len(proc.var_params):
            err(iloc, f"expected {len(proc.var_params)} var arguments, got {len(inst.var_args)}")
        for a, vp in zip(inst.var_args, proc.var_params):
            if a not in shared:
                err(iloc, f"var argument {a} is not a declared shared variable")
            elif types_ok:
                at = _resolved(p, next(sv.dtype for sv in comp.shared_vars if sv.name == a))
                ft = _resolved(p, vp.dtype)
                if at != ft:
                    err(iloc, f"var argument {a} type mismatch")


def _priority_cycle(pairs) -> Optional[str]:
    succ: dict[str, set[str]] = {}
    for hi, lo in pairs:
        succ.setdefault(hi, set()).add(lo)

    visiting: set[str] = set()
    done: set[str] = set()

    def dfs(x: str) -> bool:
        if x in done:
            return False
        if x in visiting:
            return True
        visiting.add(x)
        for y in succ.get(x, ()):
            if dfs(y):
                return True
        visiting.discard(x)
        done.add(x)
        return False

    for start in sorted(succ):
        if dfs(start):
            return start
    return None


def priority_closure(pairs) -> set[tuple[str, str]]:
    """Transitive closure of (higher, lower) pairs."""
    succ: dict[str, set[str]] = {}
    for hi, lo in pairs:
        succ.setdefault(hi, set()).add(lo)
    closed: set[tuple[str, str]] = set()
    for start in succ:
        stack = list(succ[start])
        seen = set()
        while stack:
            x = stack.pop()
            if x in seen:
                continue
            seen.add(x)
            closed.add((start, x))
            stack.extend(succ.get(x, ()))
    return closed


# ---------------------------------------------------------------------------
# Observable resolution


def resolve_observable(p: Program, path: ObservablePath) -> Atom:
    """Resolve an instance path against the root component's instance tree."""
    root = p.root_component()
    if root is None:
        raise UnknownInstance(f"no root component {p.root}")
    segs = list(path.segments)
    if segs and segs[0] == p.root:
        segs = segs[1:]
    if len(segs) != 1:
        raise UnknownInstance(f"cannot resolve instance path {'/'.join(map(str, path.segments))}")
    seg = segs[0]
    idx = None
    if isinstance(seg, int):
        idx = seg
    else:
        for i, inst in enumerate(root.instances, start=1):
            if inst.label == seg:
                idx = i
                break
        if idx is None and str(seg).isdigit():
            idx = int(seg)
    if idx is None or not (1 <= idx <= len(root.instances)):
        raise UnknownInstance(f"no instance {seg} in {root.name}")
    inst = root.instances[idx - 1]
    proc = p.process(inst.target)
    if proc is None:
        raise UnknownInstance(f"instance {idx} has no process declaration")

    if path.kind == "event":
        if path.arg not in {pp.name for pp in proc.port_params}:
            raise UnknownPort(f"instance {idx} ({proc.name}) has no port {path.arg}")
        return EventAtom(idx, str(path.arg))
    if path.kind == "state":
        if path.arg not in proc.states:
            raise UnknownState(f"instance {idx} ({proc.name}) has no state {path.arg}")
        return StateAtom(idx, str(path.arg))
    if path.kind == "start":
        return StartAtom(idx)
    if path.kind == "value":
        var, op, rhs = path.arg
        env = _TypeEnv(p, proc)
        if var not in env.vars:
            raise IllTypedPredicate(f"instance {idx} has no variable {var}")
        rhs = _close_enum(rhs, env)
        vt = env.vars[var]
        rt = env.type_of(rhs)
        if rt is None or not _comparable(vt, rt, op):
            raise IllTypedPredicate(f"predicate {var} {op} ... is ill-typed")
        const = _const_value(rhs)
        if const is None:
            raise IllTypedPredicate("value predicates compare a variable to a constant")
        return ValueAtom(idx, var, op, const)
    raise ResolveError(f"unknown observable kind {path.kind}")


def _const_value(e: Expr):
    if isinstance(e, IntLit):
        return e.value
    if isinstance(e, BoolLit):
        return e.value
    if isinstance(e, EnumLit):
        return e.value
    return None
