"""Concrete-syntax front end: lexer, parser, pretty-printer.

The accepted language is a deliberately small subset of a timed process
description syntax: constant, type, process and component declarations,
plus property declarations embedding realtime patterns ("... leadsto ...
within ...", "absent ... after ... within ...") and state-event LTL
("ltl ...").  Out-of-subset constructs fail at the first offending token;
there is no error recovery.

Interval brackets encode strictness per side: "[0,5]" is closed, "]0;5["
open on both ends; "," and ";" are interchangeable separators.  A bound is
an integer or decimal literal, a rational "p/q", the name of a previously
declared integer constant, or "inf" for an unbounded upper end.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import NoReturn, Optional

from tempock import model
from tempock.ltl import (
    FAlways,
    FAnd,
    FAtom,
    FEventually,
    FFalse,
    FImplies,
    FNext,
    FNot,
    FOr,
    FRelease,
    FTrue,
    FUntil,
    Formula,
)
from tempock.model import (
    Assign,
    BinOp,
    BoolLit,
    BoolType,
    ComponentDecl,
    ConstDecl,
    DEFAULT_INTERVAL,
    DeadAtom,
    EnumType,
    Expr,
    If,
    Instance,
    IntLit,
    IntRange,
    LocalVar,
    Loop,
    NamedType,
    NondetAssign,
    Not,
    ObservablePath,
    On,
    PortDecl,
    PortParam,
    ProcessDecl,
    Program,
    PropertyDecl,
    Select,
    Seq,
    SharedVar,
    SourceSpan,
    StartAtom,
    Stmt,
    Sync,
    TimeInterval,
    To,
    TypeDecl,
    Var,
    VarParam,
    Wait,
    expr_str,
)
from tempock.patterns import (
    Absent,
    AbsentAfterWithin,
    LeadsToWithin,
    NoGlobalDeadlock,
    RawLtl,
    Resettable,
    Unreachable,
)


class ParseError(Exception):
    """First point where the input stops matching the grammar."""

    def __init__(self, span: SourceSpan, expected: list, found: str):
        self.span = span
        self.expected = list(expected)
        self.found = found
        super().__init__(f"{span}: expected {' or '.join(self.expected)}, "
                         f"found {found!r}")


class UnboundIntervalSymbol(ParseError):
    """A symbolic interval bound with no integer constant in scope."""

    def __init__(self, span: SourceSpan, name: str):
        self.name = name
        super().__init__(span, [f"an integer constant binding for {name}"], name)


# ---------------------------------------------------------------------------
# Lexer

# words that structure declarations and statements; everything property-
# specific (leadsto, within, absent, event, ...) stays a plain identifier so
# models may reuse those names for ports and states
_KEYWORDS = frozenset("""
    and any bool component const else end false from if in init is loop none
    not on or par port priority process property select states then to true
    type union unless var wait
""".split())

_TWO_CHAR = ("[]", "<>", "<=", ">=", "=>", ":=", "..", "||")
_ONE_CHAR = frozenset("[](),;:./&|><=+->*")


@dataclass(frozen=True)
class Token:
    kind: str  # "IDENT" | "INT" | "DEC" | "EOF" | keyword | punctuation
    text: str
    line: int
    col: int


def tokenize(text: str, file: str = "<input>") -> list[Token]:
    toks: list[Token] = []
    i, line, col = 0, 1, 1
    n = len(text)
    while i < n:
        ch = text[i]
        if ch == "\n":
            i += 1
            line += 1
            col = 1
            continue
        if ch in " \t\r":
            i += 1
            col += 1
            continue
        if text.startswith("//", i):
            j = text.find("\n", i)
            j = n if j < 0 else j
            col += j - i
            i = j
            continue
        if text.startswith("/*", i):
            j = text.find("*/", i + 2)
            if j < 0:
                raise ParseError(SourceSpan(file, line, col, line, col + 2),
                                 ["a closing */"], "end of input")
            seg = text[i:j + 2]
            if "\n" in seg:
                line += seg.count("\n")
                col = len(seg) - seg.rfind("\n")
            else:
                col += len(seg)
            i = j + 2
            continue
        if ch.isdigit():
            j = i
            while j < n and text[j].isdigit():
                j += 1
            kind = "INT"
            # one dot followed by a digit is a decimal; ".." is the range op
            if j + 1 < n and text[j] == "." and text[j + 1].isdigit():
                j += 1
                while j < n and text[j].isdigit():
                    j += 1
                kind = "DEC"
            toks.append(Token(kind, text[i:j], line, col))
            col += j - i
            i = j
            continue
        if ch.isalpha() or ch == "_":
            j = i
            while j < n and (text[j].isalnum() or text[j] == "_"):
                j += 1
            word = text[i:j]
            toks.append(Token(word if word in _KEYWORDS else "IDENT",
                              word, line, col))
            col += j - i
            i = j
            continue
        two = text[i:i + 2]
        if two in _TWO_CHAR:
            toks.append(Token(two, two, line, col))
            i += 2
            col += 2
            continue
        if ch in _ONE_CHAR:
            toks.append(Token(ch, ch, line, col))
            i += 1
            col += 1
            continue
        raise ParseError(SourceSpan(file, line, col, line, col + 1),
                         ["a token"], ch)
    toks.append(Token("EOF", "", line, col))
    return toks


# ---------------------------------------------------------------------------
# Parser


class _Parser:
    def __init__(self, toks: list[Token], file: str,
                 consts: Optional[dict] = None):
        self.toks = toks
        self.i = 0
        self.file = file
        self.consts: dict[str, int] = dict(consts or {})

    # -- token plumbing

    def tok(self, k: int = 0) -> Token:
        return self.toks[min(self.i + k, len(self.toks) - 1)]

    def at(self, kind: str, k: int = 0) -> bool:
        return self.tok(k).kind == kind

    def at_word(self, word: str, k: int = 0) -> bool:
        t = self.tok(k)
        return t.kind == "IDENT" and t.text == word

    def take(self, kind: str) -> Optional[Token]:
        if self.at(kind):
            t = self.tok()
            self.i += 1
            return t
        return None

    def take_word(self, word: str) -> bool:
        if self.at_word(word):
            self.i += 1
            return True
        return False

    def expect(self, kind: str, what: Optional[str] = None) -> Token:
        t = self.take(kind)
        if t is None:
            self.fail([what or f"'{kind}'"])
        return t

    def fail(self, expected: list) -> NoReturn:
        t = self.tok()
        raise ParseError(self.span(t), expected, t.text or "end of input")

    def span(self, t: Token, end: Optional[Token] = None) -> SourceSpan:
        e = end or t
        return SourceSpan(self.file, t.line, t.col, e.line, e.col + len(e.text))

    def prev(self) -> Token:
        return self.toks[max(self.i - 1, 0)]

    # -- declarations

    def parse_program(self) -> Program:
        consts: list[ConstDecl] = []
        types: list[TypeDecl] = []
        procs: list[ProcessDecl] = []
        comps: list[ComponentDecl] = []
        props: list[PropertyDecl] = []
        while not self.at("EOF"):
            if self.at("const"):
                consts.append(self._const())
            elif self.at("type"):
                types.append(self._type_decl())
            elif self.at("process"):
                procs.append(self._process())
            elif self.at("component"):
                comps.append(self._component())
            elif self.at("property"):
                props.append(self._property())
            else:
                self.fail(["a declaration (const, type, process, component,"
                           " property)"])
        root = "main"
        if comps and all(c.name != "main" for c in comps):
            root = comps[-1].name
        return Program(tuple(consts), tuple(types), tuple(procs),
                       tuple(comps), tuple(props), root)

    def _const(self) -> ConstDecl:
        t0 = self.expect("const")
        name = self.expect("IDENT", "a constant name").text
        if self.take(":"):
            if not (self.take_word("nat") or self.take_word("int")):
                self.fail(["nat or int (constants are integers)"])
        self.expect("is")
        neg = self.take("-") is not None
        v = self.expect("INT", "an integer literal")
        value = -int(v.text) if neg else int(v.text)
        self.consts[name] = value
        return ConstDecl(name, value, span=self.span(t0, v))

    def _type_decl(self) -> TypeDecl:
        t0 = self.expect("type")
        name = self.expect("IDENT", "a type name").text
        self.expect("is")
        if self.take("union"):
            vals = [self.expect("IDENT", "an enumeration constant").text]
            while self.take("|"):
                vals.append(self.expect("IDENT", "an enumeration constant").text)
            self.expect("end")
            dt: model.DataType = EnumType(name, tuple(vals))
        else:
            dt = self._type_expr()
        return TypeDecl(name, dt, span=self.span(t0, self.prev()))

    def _type_expr(self) -> model.DataType:
        if self.take("bool"):
            return BoolType()
        if self.at("INT") or self.at("-"):
            lo = self._int_lit()
            self.expect("..")
            hi = self._int_lit()
            if lo > hi:
                self.fail([f"a nonempty range (got {lo}..{hi})"])
            return IntRange(lo, hi)
        if self.at("union"):
            self.fail(["a declared type name (inline union types are not in"
                       " subset)"])
        t = self.take("IDENT")
        if t is not None:
            if t.text in ("nat", "int"):
                self.i -= 1
                self.fail(["a finite type (unbounded integers are not in"
                           " subset)"])
            return NamedType(t.text)
        self.fail(["a type (bool, lo..hi, or a declared type name)"])

    def _int_lit(self) -> int:
        neg = self.take("-") is not None
        t = self.expect("INT", "an integer literal")
        return -int(t.text) if neg else int(t.text)

    # -- process declarations

    def _process(self) -> ProcessDecl:
        t0 = self.expect("process")
        name = self.expect("IDENT", "a process name").text
        ports: list[PortParam] = []
        if self.take("["):
            while True:
                names = self._ident_group("a port name")
                self.expect(":")
                self.expect("none", "port type none (typed ports are not in"
                                    " subset)")
                ports.extend(PortParam(n, "none") for n in names)
                if not self.take(","):
                    break
            self.expect("]")
        var_params: list[VarParam] = []
        if self.take("("):
            while True:
                names = []
                self.expect("&", "'&' (value parameters are not in subset)")
                names.append(self.expect("IDENT", "a parameter name").text)
                while self.at(",") and self.at("&", 1):
                    self.i += 2
                    names.append(self.expect("IDENT", "a parameter name").text)
                self.expect(":")
                dt = self._type_expr()
                var_params.extend(VarParam(n, dt) for n in names)
                if not self.take(","):
                    break
            self.expect(")")
        self.expect("is")
        self.expect("states")
        states = self._ident_group("a state name")
        locals_: list[LocalVar] = []
        while self.take("var"):
            while True:
                names = self._ident_group("a variable name")
                self.expect(":")
                dt = self._type_expr()
                init = self._expr() if self.take(":=") else None
                locals_.extend(LocalVar(n, dt, init) for n in names)
                if not self.take(","):
                    break
        init_stmt = self._stmt_seq() if self.take("init") else None
        blocks: list[tuple[str, Stmt]] = []
        while self.take("from"):
            st = self.expect("IDENT", "a state name").text
            blocks.append((st, self._stmt_seq()))
        return ProcessDecl(name, tuple(ports), tuple(var_params),
                           tuple(states), tuple(locals_), init_stmt,
                           tuple(blocks), span=self.span(t0, self.prev()))

    def _ident_group(self, what: str) -> list[str]:
        names = [self.expect("IDENT", what).text]
        while self.at(",") and self.at("IDENT", 1) and (self.at(",", 2)
                                                        or self.at(":", 2)):
            self.i += 1
            names.append(self.expect("IDENT", what).text)
        # a plain comma-list (e.g. states) ends without ':'; consume the rest
        while self.at(",") and self.at("IDENT", 1) and not self.at(":", 2):
            self.i += 1
            names.append(self.expect("IDENT", what).text)
        return names

    # -- statements

    def _stmt_seq(self) -> Stmt:
        stmts = [self._stmt()]
        while self.take(";"):
            stmts.append(self._stmt())
        return stmts[0] if len(stmts) == 1 else Seq(tuple(stmts))

    def _stmt(self) -> Stmt:
        if self.take("to"):
            return To(self.expect("IDENT", "a state name").text)
        if self.take("loop"):
            return Loop()
        if self.take("wait"):
            return Wait(self._interval())
        if self.take("on"):
            return On(self._expr())
        if self.take("if"):
            cond = self._expr()
            self.expect("then")
            then = self._stmt_seq()
            orelse = self._stmt_seq() if self.take("else") else None
            self.expect("end")
            return If(cond, then, orelse)
        if self.take("select"):
            branches = [self._stmt_seq()]
            while self.take("[]"):
                branches.append(self._stmt_seq())
            unless: list[Stmt] = []
            if self.take("unless"):
                unless.append(self._stmt_seq())
                while self.take("[]"):
                    unless.append(self._stmt_seq())
            self.expect("end")
            return Select(tuple(branches), tuple(unless))
        if self.at("IDENT"):
            name = self.tok().text
            if self.at(":=", 1):
                self.i += 2
                if self.take("any"):
                    return NondetAssign(name)
                return Assign(name, self._expr())
            self.i += 1
            return Sync(name)
        self.fail(["a statement"])

    # -- expressions

    def _expr(self) -> Expr:
        e = self._and_expr()
        while self.take("or"):
            e = BinOp("or", e, self._and_expr())
        return e

    def _and_expr(self) -> Expr:
        e = self._not_expr()
        while self.take("and"):
            e = BinOp("and", e, self._not_expr())
        return e

    def _not_expr(self) -> Expr:
        if self.take("not"):
            return Not(self._not_expr())
        return self._cmp_expr()

    def _cmp_expr(self) -> Expr:
        e = self._add_expr()
        for op in ("=", "<=", ">=", "<", ">"):
            if self.take(op):
                return BinOp(op, e, self._add_expr())
        return e

    def _add_expr(self) -> Expr:
        e = self._prim_expr()
        while True:
            if self.take("+"):
                e = BinOp("+", e, self._prim_expr())
            elif self.take("-"):
                e = BinOp("-", e, self._prim_expr())
            else:
                return e

    def _prim_expr(self) -> Expr:
        if self.take("true"):
            return BoolLit(True)
        if self.take("false"):
            return BoolLit(False)
        t = self.take("INT")
        if t is not None:
            return IntLit(int(t.text))
        if self.take("-"):
            t = self.expect("INT", "an integer literal")
            return IntLit(-int(t.text))
        if self.take("("):
            e = self._expr()
            self.expect(")")
            return e
        t = self.take("IDENT")
        if t is not None:
            return Var(t.text)
        self.fail(["an expression"])

    # -- time intervals

    def _interval(self) -> TimeInterval:
        t0 = self.tok()
        if self.take("["):
            lower_strict = False
        elif self.take("]"):
            lower_strict = True
        else:
            self.fail(["'[' or ']' opening a time interval"])
        lo = self._bound(allow_inf=False)
        if not (self.take(",") or self.take(";")):
            self.fail(["',' or ';' between interval bounds"])
        hi = self._bound(allow_inf=True)
        if self.take("]"):
            upper_strict = False
        elif self.take("["):
            upper_strict = True
        else:
            self.fail(["']' or '[' closing a time interval"])
        try:
            return TimeInterval(lo, hi, lower_strict,
                                True if hi is None else upper_strict)
        except ValueError as e:
            raise ParseError(self.span(t0, self.prev()),
                             [f"a well-formed interval ({e})"],
                             f"{lo},{hi}") from None

    def _bound(self, allow_inf: bool) -> Optional[Fraction]:
        t = self.tok()
        if t.kind == "IDENT":
            if t.text == "inf":
                if not allow_inf:
                    self.fail(["a finite lower bound"])
                self.i += 1
                return None
            self.i += 1
            if t.text not in self.consts:
                raise UnboundIntervalSymbol(self.span(t), t.text)
            return Fraction(self.consts[t.text])
        if t.kind == "DEC":
            self.i += 1
            return Fraction(t.text)
        if t.kind == "INT":
            self.i += 1
            num = int(t.text)
            if self.at("/") and self.at("INT", 1):
                self.i += 1
                den = int(self.expect("INT").text)
                if den == 0:
                    self.fail(["a nonzero denominator"])
                return Fraction(num, den)
            return Fraction(num)
        self.fail(["an interval bound (a number, a constant name, or inf)"])

    # -- component declarations

    def _component(self) -> ComponentDecl:
        t0 = self.expect("component")
        name = self.expect("IDENT", "a component name").text
        self.expect("is")
        ports: list[PortDecl] = []
        shared: list[SharedVar] = []
        prios: list[tuple[str, str]] = []
        while True:
            if self.take("port"):
                while True:
                    names = self._ident_group("a port name")
                    self.expect(":")
                    self.expect("none", "port type none (typed ports are not"
                                        " in subset)")
                    iv = self._interval() if self.take("in") else DEFAULT_INTERVAL
                    ports.extend(PortDecl(n, "none", iv) for n in names)
                    if not self.take(","):
                        break
            elif self.take("var"):
                while True:
                    names = self._ident_group("a shared variable name")
                    self.expect(":")
                    dt = self._type_expr()
                    self.expect(":=", "':=' (shared variables need an initial"
                                      " value)")
                    init = self._expr()
                    shared.extend(SharedVar(n, dt, init) for n in names)
                    if not self.take(","):
                        break
            elif self.take("priority"):
                while True:
                    chain = [self.expect("IDENT", "a port name").text]
                    while self.take(">"):
                        chain.append(self.expect("IDENT", "a port name").text)
                    if len(chain) < 2:
                        self.fail(["'>' (a priority relates at least two"
                                   " ports)"])
                    prios.extend(zip(chain, chain[1:]))
                    if not self.take(","):
                        break
            else:
                break
        instances: list[Instance] = []
        if self.take("par"):
            self._par_header({p.name for p in ports})
            while True:
                instances.append(self._instance())
                if not self.take("||"):
                    break
            self.expect("end")
        return ComponentDecl(name, tuple(ports), tuple(shared), tuple(prios),
                             tuple(instances), span=self.span(t0, self.prev()))

    def _par_header(self, declared: set):
        """Optional '* in' or 'p, q in'.  The listed ports are checked but
        otherwise ignored: synchronization is always by shared port."""
        if self.take("*"):
            self.expect("in")
            return
        j = self.i
        if not self.at("IDENT"):
            return
        k = j + 1
        while self.toks[k].kind == "," and self.toks[k + 1].kind == "IDENT":
            k += 2
        if self.toks[k].kind != "in":
            return
        while True:
            t = self.expect("IDENT", "a port name")
            if t.text not in declared:
                raise ParseError(self.span(t), ["a declared port"], t.text)
            if not self.take(","):
                break
        self.expect("in")

    def _instance(self) -> Instance:
        label = None
        if self.at("IDENT") and self.at(":", 1):
            label = self.tok().text
            self.i += 2
        target = self.expect("IDENT", "a process name").text
        port_args: list[str] = []
        if self.take("["):
            if not self.at("]"):
                port_args.append(self.expect("IDENT", "a port name").text)
                while self.take(","):
                    port_args.append(self.expect("IDENT", "a port name").text)
            self.expect("]")
        var_args: list[str] = []
        if self.take("("):
            if not self.at(")"):
                while True:
                    self.expect("&", "'&'")
                    var_args.append(
                        self.expect("IDENT", "a shared variable name").text)
                    if not self.take(","):
                        break
            self.expect(")")
        return Instance(target, tuple(port_args), tuple(var_args), label)

    # -- properties

    def _property(self) -> PropertyDecl:
        t0 = self.expect("property")
        name = self.expect("IDENT", "a property name").text
        self.expect("is")
        body = self._property_body()
        return PropertyDecl(name, body, span=self.span(t0, self.prev()))

    def _property_body(self):
        if self.take_word("ltl"):
            return RawLtl(self._formula())
        if self.take_word("deadlockfree"):
            return NoGlobalDeadlock()
        if self.take_word("unreachable"):
            return Unreachable(self._operand())
        if self.take_word("resettable"):
            return Resettable(self._operand())
        if self.take_word("absent"):
            forbidden = self._operand()
            trigger = self._operand() if self.take_word("after") else None
            window = self._interval() if self.take_word("within") else None
            if trigger is None and window is None:
                return Absent(forbidden)
            if trigger is None:
                # window measured from system start
                trigger = (StartAtom(1),)
            if window is None:
                # forbidden forever after the trigger
                window = DEFAULT_INTERVAL
            return AbsentAfterWithin(trigger, forbidden, window)
        if self.at("(") and self._wraps_whole_body():
            self.i += 1
            body = self._property_body()
            self.expect(")")
            return body
        trigger = self._operand()
        if not self.take_word("leadsto"):
            self.fail(["leadsto"])
        response = self._operand()
        if not self.take_word("within"):
            self.fail(["within"])
        return LeadsToWithin(trigger, response, self._interval())

    def _wraps_whole_body(self) -> bool:
        """True when the '(' at the cursor closes only at the end of the
        body, i.e. it wraps a whole pattern rather than one operand."""
        depth = 0
        j = self.i
        while j < len(self.toks):
            k = self.toks[j].kind
            if k == "(":
                depth += 1
            elif k == ")":
                depth -= 1
                if depth == 0:
                    nxt = self.toks[j + 1]
                    if nxt.kind == "or":
                        return False
                    return not (nxt.kind == "IDENT"
                                and nxt.text in ("leadsto", "within", "after"))
            elif k == "EOF":
                break
            j += 1
        return False

    def _operand(self) -> tuple:
        atoms = list(self._operand_term())
        while self.take("or"):
            atoms.extend(self._operand_term())
        return tuple(atoms)

    def _operand_term(self) -> tuple:
        if self.take("("):
            inner = self._operand()
            self.expect(")")
            return inner
        return (self._path(),)

    _PATH_KINDS = ("event", "state", "value", "start")

    def _path(self) -> ObservablePath:
        segs: list = []
        while True:
            t = self.tok()
            if t.kind == "INT":
                segs.append(int(t.text))
                self.i += 1
            elif t.kind == "IDENT":
                if segs and t.text in self._PATH_KINDS:
                    return self._path_kind(t.text, segs)
                segs.append(t.text)
                self.i += 1
            else:
                self.fail(["an observable path segment"])
            self.expect("/", "'/' (observables are instance/kind paths)")

    def _path_kind(self, kind: str, segs: list) -> ObservablePath:
        self.i += 1
        if kind == "start":
            return ObservablePath(tuple(segs), "start", None)
        if kind == "event":
            port = self.expect("IDENT", "a port name").text
            return ObservablePath(tuple(segs), "event", port)
        if kind == "state":
            st = self.expect("IDENT", "a state name").text
            return ObservablePath(tuple(segs), "state", st)
        self.expect("(")
        var = self.expect("IDENT", "a variable name").text
        for op in ("=", "<=", ">=", "<", ">"):
            if self.take(op):
                break
        else:
            self.fail(["a comparison (=, <, <=, >, >=)"])
        rhs = self._add_expr()
        self.expect(")")
        return ObservablePath(tuple(segs), "value", (var, op, rhs))

    # -- LTL formulas

    def _formula(self) -> Formula:
        left = self._f_or()
        if self.take("=>"):
            return FImplies(left, self._formula())
        return left

    def _f_or(self) -> Formula:
        e = self._f_and()
        while self.take("or"):
            e = FOr(e, self._f_and())
        return e

    def _f_and(self) -> Formula:
        e = self._f_until()
        while self.take("and"):
            e = FAnd(e, self._f_until())
        return e

    def _f_until(self) -> Formula:
        left = self._f_unary()
        if self.take_word("until"):
            return FUntil(left, self._f_until())
        if self.take_word("release"):
            return FRelease(left, self._f_until())
        return left

    def _f_unary(self) -> Formula:
        if self.take("[]"):
            return FAlways(self._f_unary())
        if self.take("<>"):
            return FEventually(self._f_unary())
        if self.take("not"):
            return FNot(self._f_unary())
        if self.at_word("X") and not self.at("/", 1):
            self.i += 1
            return FNext(self._f_unary())
        return self._f_primary()

    def _f_primary(self) -> Formula:
        if self.take("true"):
            return FTrue()
        if self.take("false"):
            return FFalse()
        if self.at_word("dead") and not self.at("/", 1):
            self.i += 1
            return FAtom(DeadAtom())
        if self.take("("):
            f = self._formula()
            self.expect(")")
            return f
        if self.at("IDENT") or self.at("INT"):
            return FAtom(self._path())
        self.fail(["a formula"])


# ---------------------------------------------------------------------------
# Entry points


def parse_program(text: str, *, filename: str = "<input>") -> Program:
    """Parse a full model file; raises ParseError at the first mismatch."""
    return _Parser(tokenize(text, filename), filename).parse_program()


def parse_property(text: str, *, consts=None,
                   filename: str = "<property>") -> PropertyDecl:
    """Parse one standalone property declaration.

    Symbolic interval bounds resolve against `consts`: a name->int mapping
    or a Program whose constant declarations are in scope.
    """
    if isinstance(consts, Program):
        consts = {c.name: c.value for c in consts.consts}
    p = _Parser(tokenize(text, filename), filename, consts)
    if not p.at("property"):
        p.fail(["property"])
    decl = p._property()
    if not p.at("EOF"):
        p.fail(["end of input"])
    return decl


# ---------------------------------------------------------------------------
# Pretty-printing (parsing the output reproduces the AST, spans aside)


def pretty_print(p: Program) -> str:
    out: list[str] = []
    for c in p.consts:
        out.append(f"const {c.name} : nat is {c.value}")
    for td in p.type_decls:
        out.append(f"type {td.name} is {_pp_type(td.dtype, decl=td.name)}")
    for proc in p.processes:
        out.append(_pp_process(proc))
    for comp in p.components:
        out.append(_pp_component(comp))
    for prop in p.properties:
        out.append(f"property {prop.name} is {body_str(prop.body)}")
    return "\n\n".join(out) + "\n"


def _pp_type(t, decl: Optional[str] = None) -> str:
    if isinstance(t, BoolType):
        return "bool"
    if isinstance(t, IntRange):
        return f"{t.lo}..{t.hi}"
    if isinstance(t, EnumType) and decl == t.name:
        return "union " + " | ".join(t.values) + " end"
    return t.name


def _pp_process(proc: ProcessDecl) -> str:
    head = f"process {proc.name}"
    if proc.port_params:
        head += " [" + ", ".join(f"{pp.name} : {pp.ptype}"
                                 for pp in proc.port_params) + "]"
    if proc.var_params:
        head += " (" + ", ".join(f"&{vp.name} : {_pp_type(vp.dtype)}"
                                 for vp in proc.var_params) + ")"
    lines = [head + " is", "  states " + ", ".join(proc.states)]
    for lv in proc.locals:
        d = f"  var {lv.name} : {_pp_type(lv.dtype)}"
        if lv.init is not None:
            d += f" := {expr_str(lv.init)}"
        lines.append(d)
    if proc.init_stmt is not None:
        lines.append("  init " + _pp_stmt(proc.init_stmt))
    for state, block in proc.from_blocks:
        lines.append(f"  from {state}")
        lines.append("    " + _pp_stmt(block))
    return "\n".join(lines)


def _pp_stmt(s: Stmt) -> str:
    if isinstance(s, Seq):
        return "; ".join(_pp_stmt(x) for x in s.stmts)
    if isinstance(s, To):
        return f"to {s.state}"
    if isinstance(s, Loop):
        return "loop"
    if isinstance(s, Sync):
        return s.port
    if isinstance(s, Assign):
        return f"{s.var} := {expr_str(s.expr)}"
    if isinstance(s, NondetAssign):
        return f"{s.var} := any"
    if isinstance(s, Wait):
        return f"wait {s.interval}"
    if isinstance(s, On):
        return f"on {expr_str(s.cond)}"
    if isinstance(s, If):
        t = f"if {expr_str(s.cond)} then {_pp_stmt(s.then)}"
        if s.orelse is not None:
            t += f" else {_pp_stmt(s.orelse)}"
        return t + " end"
    if isinstance(s, Select):
        t = "select " + " [] ".join(_pp_stmt(b) for b in s.branches)
        if s.unless_branches:
            t += " unless " + " [] ".join(_pp_stmt(b)
                                          for b in s.unless_branches)
        return t + " end"
    raise TypeError(f"not a statement: {s!r}")


def _pp_component(comp: ComponentDecl) -> str:
    lines = [f"component {comp.name} is"]
    for pd in comp.ports:
        lines.append(f"  port {pd.name} : {pd.ptype} in {pd.interval}")
    for sv in comp.shared_vars:
        lines.append(f"  var {sv.name} : {_pp_type(sv.dtype)}"
                     f" := {expr_str(sv.init)}")
    for chain in _chains(comp.priorities):
        lines.append("  priority " + " > ".join(chain))
    if comp.instances:
        lines.append("  par * in")
        for k, inst in enumerate(comp.instances):
            lines.append(("     " if k == 0 else "  || ") + _pp_instance(inst))
        lines.append("  end")
    return "\n".join(lines)


def _chains(pairs) -> list:
    chains: list[list[str]] = []
    for hi, lo in pairs:
        if chains and chains[-1][-1] == hi:
            chains[-1].append(lo)
        else:
            chains.append([hi, lo])
    return chains


def _pp_instance(inst: Instance) -> str:
    t = inst.target
    if inst.label:
        t = f"{inst.label} : {t}"
    if inst.port_args:
        t += " [" + ", ".join(inst.port_args) + "]"
    if inst.var_args:
        t += " (" + ", ".join("&" + v for v in inst.var_args) + ")"
    return t


def body_str(body) -> str:
    """Concrete syntax of one property body."""
    if isinstance(body, RawLtl):
        return f"ltl {body.formula}"
    if isinstance(body, NoGlobalDeadlock):
        return "deadlockfree"
    if isinstance(body, Unreachable):
        return f"unreachable {_op_str(body.targets)}"
    if isinstance(body, Resettable):
        return f"resettable {_op_str(body.targets)}"
    if isinstance(body, Absent):
        return f"absent {_op_str(body.targets)}"
    if isinstance(body, AbsentAfterWithin):
        t = f"absent {_op_str(body.forbidden)}"
        if body.trigger == (StartAtom(1),):
            return t + f" within {body.window}"
        t += f" after {_op_str(body.trigger)}"
        if body.window != DEFAULT_INTERVAL:
            t += f" within {body.window}"
        return t
    if isinstance(body, LeadsToWithin):
        return (f"{_op_str(body.trigger)} leadsto {_op_str(body.response)}"
                f" within {body.window}")
    raise TypeError(f"not a property body: {body!r}")


def _op_str(atoms) -> str:
    return "(" + " or ".join(str(a) for a in atoms) + ")"
