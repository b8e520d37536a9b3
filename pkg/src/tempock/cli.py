"""Command-line interface: parse, compile, explore, check, report.

Commands
    check FILE     check the file's properties against its model
    explore FILE   build the class graph only and print statistics
    sched TABLE    schedulability analysis of a task table, both modes
    oracle FILE    cross-check the class graph against the grid semantics
    fmt FILE       parse and pretty-print a model

Exit codes: 0 all properties hold (or MATCH / schedulable); 1 some property
violated (or MISMATCH / not schedulable); 2 resource limits or internal
errors; 64 usage errors; 65 parse / well-formedness / task-table errors.
"""

from __future__ import annotations

import argparse
import json
import resource
import sys
import time
from fractions import Fraction
from typing import Optional

from .model import ResolveError, check_wellformed
from .parser import ParseError, parse_program, pretty_print
from .tts import CompileError, compile_program
from .classgraph import (HorizonExceeded, agreement, build_graph,
                         oracle_explore)
from .ltl import Counterexample, Exhausted, Holds, Violated
from .patterns import PatternError, check_pattern, resolve_pattern
from .library import (InvalidTaskSpec, build_tasksystem, check_schedulable,
                      parse_task_table)

EXIT_OK = 0
EXIT_VIOLATED = 1
EXIT_LIMIT = 2
EXIT_USAGE = 64
EXIT_PARSE = 65


class _UsageError(Exception):
    pass


class _ContentError(Exception):
    """The input was read but is not an acceptable model."""


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # argparse defaults to exit code 2
        raise _UsageError(message)


def _cex_lines(cex: Counterexample, graph, tts) -> list[str]:
    def fmt(steps, k0):
        out = []
        for k, s in enumerate(steps, start=k0):
            ev = "(stutter)" if s.tid is None else tts.event_name(s.tid)
            lo = "?" if s.earliest is None else str(s.earliest)
            hi = "inf" if s.latest is None else str(s.latest)
            out.append(f"#{k}  t=[{lo},{hi}]  {ev}  ->  {graph.class_summary(s.dst)}")
        return out
    lines = fmt(cex.prefix, 0)
    if cex.cycle:
        lines.append("cycle:")
        lines += fmt(cex.cycle, len(cex.prefix))
    return lines


def _cex_json(cex: Counterexample, graph, tts) -> dict:
    def fmt(steps):
        out = []
        for s in steps:
            ev = None if s.tid is None else tts.event_name(s.tid)
            out.append({
                "event": ev,
                "lo": None if s.earliest is None else str(s.earliest),
                "hi": None if s.latest is None else str(s.latest),
                "class": graph.class_summary(s.dst),
            })
        return out
    return {"prefix": fmt(cex.prefix), "cycle": fmt(cex.cycle)}


def _load_program(path: str):
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as e:
        raise _UsageError(f"cannot read {path}: {e.strerror}")
    program = parse_program(text, filename=path)
    diags = check_wellformed(program)
    if diags:
        raise _ContentError("; ".join(str(d) for d in diags))
    if not program.components:
        raise _ContentError(f"{path}: model has no component")
    return program


def _emit(report: dict, fmt: str, lines: list[str]):
    if fmt == "json":
        print(json.dumps(report, indent=2, sort_keys=True))
    else:
        print("\n".join(lines))


def cmd_check(args) -> int:
    program = _load_program(args.file)
    names = [p.name for p in program.properties]
    if args.prop is not None:
        if args.prop not in names:
            raise _UsageError(f"no property named {args.prop!r} in {args.file}")
        names = [args.prop]
    tts = compile_program(program)

    rows, lines = [], []
    exit_code = EXIT_OK
    total0 = time.perf_counter()
    for name in names:
        decl = next(p for p in program.properties if p.name == name)
        pattern = resolve_pattern(program, decl.body)
        t0 = time.perf_counter()
        res = check_pattern(tts, pattern, max_classes=args.max_classes,
                            time_budget=args.time_budget, threads=args.threads)
        dt = time.perf_counter() - t0
        verdict = type(res.verdict).__name__
        row = {"name": name, "verdict": verdict,
               "classes": res.graph.n_classes, "edges": len(res.graph.edges),
               "seconds": round(dt, 4)}
        line = (f"{name}: {verdict}  ({res.graph.n_classes} classes, "
                f"{dt:.2f} s)")
        if isinstance(res.verdict, Violated):
            exit_code = max(exit_code, EXIT_VIOLATED)
            cex = res.verdict.counterexample
            row["counterexample"] = _cex_json(cex, res.graph, res.system)
            lines.append(line)
            lines += ["  " + x for x in _cex_lines(cex, res.graph, res.system)]
        elif isinstance(res.verdict, Exhausted):
            exit_code = max(exit_code, EXIT_LIMIT)
            row["reason"] = res.verdict.reason
            lines.append(f"{line}  [{res.verdict.reason}]")
        else:
            lines.append(line)
        rows.append(row)

    total = time.perf_counter() - total0
    n_bad = sum(1 for r in rows if r["verdict"] == "Violated")
    lines.append(f"total: {len(rows)} properties, {n_bad} violated, "
                 f"{total:.2f} s")
    report = {"schema": 1, "command": "check", "file": args.file,
              "properties": rows, "seconds": round(total, 4)}
    _emit(report, args.format, lines)
    return exit_code


def cmd_explore(args) -> int:
    program = _load_program(args.file)
    tts = compile_program(program)
    g = build_graph(tts, max_classes=args.max_classes,
                    time_budget=args.time_budget, threads=args.threads)
    stats = g.stats()
    stats["peak_rss_mb"] = round(
        resource.getrusage(resource.RUSAGE_SELF).ru_maxrss / 1024, 1)
    lines = [f"classes: {stats['classes']}",
             f"edges: {stats['edges']}",
             f"dead classes: {stats['dead']}",
             f"distinct states: {stats['distinct_states']}",
             f"wall time: {stats['elapsed_s']} s",
             f"peak memory: {stats['peak_rss_mb']} MB"]
    if g.limit_hit:
        lines.append(f"limit hit: {g.limit_hit}")
    report = {"schema": 1, "command": "explore", "file": args.file, **stats}
    _emit(report, args.format, lines)
    return EXIT_LIMIT if g.limit_hit else EXIT_OK


_MODE_TITLES = (("det-wcet", "WCET-exact"), ("interval", "Interval"))


def cmd_sched(args) -> int:
    try:
        with open(args.table, encoding="utf-8") as fh:
            tasks = parse_task_table(fh.read())
    except OSError as e:
        raise _UsageError(f"cannot read {args.table}: {e.strerror}")

    outcomes = {}
    for mode, _ in _MODE_TITLES:
        program = build_tasksystem(tasks, mode)
        outcomes[mode] = check_schedulable(
            program, max_classes=args.max_classes or 2_000_000,
            time_budget=args.time_budget)

    def word(r):
        if r.schedulable is True:
            return "SCHEDULABLE"
        if r.schedulable is False:
            return "NOT SCHEDULABLE"
        return "UNKNOWN"

    headline = " / ".join(f"{title}: {word(outcomes[mode])}"
                          for mode, title in _MODE_TITLES)
    lines = [headline]
    rows = {}
    exit_code = EXIT_OK
    for mode, _ in _MODE_TITLES:
        r = outcomes[mode]
        row = {"verdict": word(r), "classes": r.n_classes,
               "seconds": round(r.seconds, 4), "missed": list(r.missed)}
        extra = f", missed deadline: {', '.join(r.missed)}" if r.missed else ""
        lines.append(f"  {mode}: {r.n_classes} classes, {r.seconds:.2f} s{extra}")
        if r.schedulable is False:
            exit_code = max(exit_code, EXIT_VIOLATED)
            if r.counterexample is not None:
                row["counterexample"] = _cex_json(
                    r.counterexample, r.check.graph, r.check.system)
                lines.append(f"  counterexample ({mode}):")
                lines += ["    " + x for x in _cex_lines(
                    r.counterexample, r.check.graph, r.check.system)]
        elif r.schedulable is None:
            exit_code = max(exit_code, EXIT_LIMIT)
        rows[mode] = row
    report = {"schema": 1, "command": "sched", "table": args.table,
              "modes": rows}
    _emit(report, args.format, lines)
    return exit_code


def cmd_oracle(args) -> int:
    program = _load_program(args.file)
    tts = compile_program(program)
    g = build_graph(tts, max_classes=args.max_classes,
                    time_budget=args.time_budget)
    if g.limit_hit:
        _emit({"schema": 1, "command": "oracle", "file": args.file,
               "result": "inconclusive", "reason": g.limit_hit},
              args.format, [f"inconclusive: class graph hit {g.limit_hit}"])
        return EXIT_LIMIT
    gran = Fraction(args.granularity) if args.granularity else None
    try:
        oracle = oracle_explore(tts, granularity=gran)
    except HorizonExceeded as e:
        hint = ("the grid exploration exceeded its budget; try a coarser "
                "--granularity or a smaller model")
        _emit({"schema": 1, "command": "oracle", "file": args.file,
               "result": "inconclusive", "reason": str(e), "hint": hint},
              args.format, [f"inconclusive: {e}", hint])
        return EXIT_LIMIT
    diffs = agreement(g, oracle)
    result = "MATCH" if not diffs else "MISMATCH"
    lines = [f"{result}  (granularity {oracle.granularity}, "
             f"{oracle.n_configs} grid configurations, "
             f"{g.n_classes} classes)"]
    lines += ["  " + d for d in diffs]
    _emit({"schema": 1, "command": "oracle", "file": args.file,
           "result": result, "granularity": str(oracle.granularity),
           "grid_configs": oracle.n_configs, "classes": g.n_classes,
           "mismatches": diffs}, args.format, lines)
    return EXIT_OK if not diffs else EXIT_VIOLATED


def cmd_fmt(args) -> int:
    program = _load_program(args.file)
    sys.stdout.write(pretty_print(program))
    return EXIT_OK


def _build_argparser() -> _Parser:
    ap = _Parser(prog="tempock", description=__doc__,
                 formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p, with_threads=True):
        p.add_argument("--max-classes", type=int, default=None, metavar="N")
        p.add_argument("--time-budget", type=float, default=None, metavar="S")
        if with_threads:
            p.add_argument("--threads", type=int, default=1, metavar="N")
        p.add_argument("--format", choices=("text", "json"), default="text")

    p = sub.add_parser("check", help="check properties")
    p.add_argument("file")
    p.add_argument("--prop", default=None, metavar="NAME")
    common(p)
    p.set_defaults(fn=cmd_check)

    p = sub.add_parser("explore", help="build the class graph, print stats")
    p.add_argument("file")
    common(p)
    p.set_defaults(fn=cmd_explore)

    p = sub.add_parser("sched", help="schedulability analysis of a task table")
    p.add_argument("table")
    common(p, with_threads=False)
    p.set_defaults(fn=cmd_sched)

    p = sub.add_parser("oracle", help="class graph vs discrete-time oracle")
    p.add_argument("file")
    p.add_argument("--granularity", default=None, metavar="P/Q")
    common(p, with_threads=False)
    p.set_defaults(fn=cmd_oracle)

    p = sub.add_parser("fmt", help="parse and pretty-print a model")
    p.add_argument("file")
    p.set_defaults(fn=cmd_fmt)
    return ap


def main(argv: Optional[list[str]] = None) -> int:
    ap = _build_argparser()
    try:
        args = ap.parse_args(argv)
        for lim in ("max_classes", "time_budget", "threads"):
            v = getattr(args, lim, None)
            if v is not None and v <= 0:
                raise _UsageError(f"--{lim.replace('_', '-')} must be positive")
        if getattr(args, "granularity", None) is not None:
            try:
                if Fraction(args.granularity) <= 0:
                    raise ValueError
            except (ValueError, ZeroDivisionError):
                raise _UsageError(
                    f"--granularity must be a positive rational, "
                    f"got {args.granularity!r}")
        return args.fn(args)
    except _UsageError as e:
        print(f"usage error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except (ParseError, _ContentError, InvalidTaskSpec, ResolveError,
            CompileError, PatternError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_PARSE
    except MemoryError:
        print("error: out of memory", file=sys.stderr)
        return EXIT_LIMIT


if __name__ == "__main__":
    sys.exit(main())
