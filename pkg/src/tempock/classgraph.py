"""Finite abstraction of the dense-time behavior as a graph of state classes.

A state class is a discrete state plus a firing domain: a difference-bound
matrix over the remaining firing times of the enabled transitions.  Bounds
are encoded as integers, 2*value plus a low bit that is 0 for a strict bound
and 1 for a weak one, so that smaller means tighter and addition preserves
strictness.  Rational interval endpoints are cleared by a global scale
factor, keeping all arithmetic exact.

The successor domain is computed in O(n^2) per firing: one relaxation pass
against the fired clock (whose minimality is exactly the firability
condition), a projection that re-anchors the matrix on the firing instant,
and fresh interval boxes with via-origin cross terms for the newly enabled
transitions.  Under the strong urgency semantics a class is dead exactly
when no transition is enabled.

The module also carries an independent discrete-time oracle that steps a
configuration of integer transition ages on a uniform grid, refining the
grid until every firing window contains a grid point.  Its reachable
projection is compared against the class graph in tests.
"""

from __future__ import annotations

import math
import random
import time as _time
from collections import deque
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional

from tempock.model import TimeInterval
from tempock.tts import Transition, Tts

INF_ENC = 1 << 62


def enc(value: int, strict: bool) -> int:
    """Encode the bound (value, strict) as 2*value | weak-bit."""
    return (value << 1) | (0 if strict else 1)


def enc_add(a: int, b: int) -> int:
    if a >= INF_ENC or b >= INF_ENC:
        return INF_ENC
    return (((a >> 1) + (b >> 1)) << 1) | (a & b & 1)


def enc_value(e: int) -> int:
    return e >> 1


def enc_strict(e: int) -> bool:
    return not (e & 1)


def compute_scale(tts: Tts) -> int:
    """Common denominator turning every interval endpoint into an integer."""
    s = 1
    for t in tts.transitions:
        s = math.lcm(s, t.interval.lower.denominator)
        if t.interval.upper is not None:
            s = math.lcm(s, t.interval.upper.denominator)
    return s


class LimitExceeded(Exception):
    """Raised internally; exploration returns a partial graph instead."""


@dataclass
class ClassGraph:
    tts: Tts
    scale: int
    states: list[tuple] = field(default_factory=list)  # discrete state per class
    dbms: list[tuple] = field(default_factory=list)  # flat encoded matrices
    enabled: list[tuple[int, ...]] = field(default_factory=list)
    firable: list[tuple[int, ...]] = field(default_factory=list)
    tfmask: list[int] = field(default_factory=list)  # time-firable positions
    edges: list[tuple[int, int, int]] = field(default_factory=list)  # (src, tid, dst)
    dead: set[int] = field(default_factory=set)
    initial: int = 0
    limit_hit: Optional[str] = None  # "max_classes" | "time_budget" | None
    elapsed: float = 0.0

    @property
    def n_classes(self) -> int:
        return len(self.states)

    def adjacency(self) -> list[list[tuple[int, int]]]:
        adj: list[list[tuple[int, int]]] = [[] for _ in range(len(self.states))]
        for src, tid, dst in self.edges:
            adj[src].append((tid, dst))
        return adj

    def class_summary(self, ci: int) -> str:
        tag = " [dead]" if ci in self.dead else ""
        return f"{self.tts.state_summary(self.states[ci])}{tag}"

    def reachable_states(self) -> frozenset[tuple]:
        return frozenset(self.states)

    def dead_states(self) -> frozenset[tuple]:
        return frozenset(self.states[ci] for ci in self.dead)

    def edge_triples(self) -> frozenset[tuple]:
        return frozenset(
            (self.states[s], tid, self.states[d]) for s, tid, d in self.edges
        )

    def domain_text(self, ci: int) -> str:
        """Human-readable remaining-firing-time windows of one class."""
        en = self.enabled[ci]
        D = self.dbms[ci]
        m = len(en) + 1
        out = []
        for k, tid in enumerate(en, start=1):
            lo = -enc_value(D[k])  # D[0][k] bounds -theta_k
            lob = "]" if enc_strict(D[k]) else "["
            upe = D[k * m]
            if upe >= INF_ENC:
                up, upb = "inf", "["
            else:
                up = str(Fraction(enc_value(upe), self.scale))
                upb = "[" if enc_strict(upe) else "]"
            out.append(
                f"{self.tts.event_name(tid)}:{lob}{Fraction(lo, self.scale)},{up}{upb}"
            )
        return " ".join(out)

    def stats(self) -> dict:
        return {
            "classes": len(self.states),
            "edges": len(self.edges),
            "dead": len(self.dead),
            "distinct_states": len(set(self.states)),
            "elapsed_s": round(self.elapsed, 3),
            "limit": self.limit_hit,
        }

    def dump(self) -> str:
        lines = []
        adj = self.adjacency()
        for ci in range(len(self.states)):
            lines.append(f"class {ci}: {self.class_summary(ci)}")
            lines.append(f"  dom {self.domain_text(ci)}")
            for tid, dst in adj[ci]:
                lines.append(f"  --{self.tts.event_name(tid)}--> {dst}")
        return "\n".join(lines) + "\n"


def _scaled_bounds(tts: Tts, scale: int):
    """Per transition: encoded -lower (row 0) and upper (column 0) bounds."""
    lo = []
    up = []
    for t in tts.transitions:
        iv = t.interval
        a = int(iv.lower * scale)
        lo.append(enc(-a, iv.lower_strict))
        if iv.upper is None:
            up.append(INF_ENC)
        else:
            b = int(iv.upper * scale)
            up.append(enc(b, iv.upper_strict))
    return lo, up


def initial_class(tts: Tts, scale: Optional[int] = None):
    scale = scale or compute_scale(tts)
    lo, up = _scaled_bounds(tts, scale)
    en = tts.enabled_ids(tts.initial)
    n = len(en)
    m = n + 1
    D = [1] * (m * m)
    for i, t in enumerate(en, start=1):
        D[i * m] = up[t]
        D[i] = lo[t]
    for i, ti in enumerate(en, start=1):
        for j, tj in enumerate(en, start=1):
            if i != j:
                D[i * m + j] = enc_add(up[ti], lo[tj])
    return tts.initial, en, tuple(D)


def firable_of(D: tuple, n: int, enabled: tuple[int, ...],
               dominators: list[int]) -> tuple[tuple[int, ...], int]:
    """Transitions that can fire first, and the time-firable position mask.

    Time-firable t: every other enabled u admits theta_u >= theta_t, i.e.
    D[u][t] >= (0,<=).  A single fresh edge cannot build a negative cycle
    any other way because the matrix is canonical.

    A dominated t survives only if it can fire strictly before every
    time-firable dominator d: D[d][t] >= (0,<) feasible, i.e. >= 2.  Because
    dominators are restricted to point intervals, theta_d equals d's release
    instant in every run of the class, so this is exact, not an abstraction.
    """
    m = n + 1
    tfmask = 0
    tfpos = []
    for k in range(1, m):
        ok = True
        for u in range(1, m):
            if u != k and D[u * m + k] < 1:
                ok = False
                break
        if ok:
            tfmask |= 1 << k
            tfpos.append(k)
    if not tfpos:
        return (), 0
    mask = 0
    for k in tfpos:
        mask |= 1 << enabled[k - 1]
    out = []
    for k in tfpos:
        t = enabled[k - 1]
        dom = dominators[t] & mask
        if dom:
            ok = True
            for j in tfpos:
                if j != k and (dom >> enabled[j - 1]) & 1 and D[j * m + k] < 2:
                    ok = False
                    break
            if not ok:
                continue
        out.append(t)
    return tuple(out), tfmask


def successor_domain(D: tuple, enabled: tuple[int, ...], fired: int,
                     new_enabled: tuple[int, ...], lo: list[int], up: list[int],
                     strict_mask: int = 0, seal: bool = False):
    """Canonical firing domain after firing `fired` from (enabled, D).

    Positions set in strict_mask must fire strictly after the firing instant
    (priority releases and sealing); their fresh edges carry weight (0,<)
    instead of (0,<=).  Under seal, newly enabled clocks are pushed strictly
    past the instant as well.  Returns None when these constraints empty the
    domain: only a sealing transition racing a clock pinned to its own
    instant can do that, and then no run realizes the interleaving.
    """
    n = len(enabled)
    m = n + 1
    f = enabled.index(fired) + 1

    if strict_mask:
        for u in range(1, m):
            if u != f and (strict_mask >> u) & 1 and D[u * m + f] <= 1:
                return None
    if seal:
        persistent = set(enabled) - {fired}
        for t in new_enabled:
            if t not in persistent and up[t] <= 1:
                return None

    # one relaxation pass: close against "fired goes first"
    colmin = [INF_ENC] * m
    for j in range(m):
        best = INF_ENC
        for u in range(1, m):
            if u == f:
                continue
            e = D[u * m + j]
            if (strict_mask >> u) & 1:
                e &= ~1
            if e < best:
                best = e
        colmin[j] = best

    pos = {}  # tid -> index into the d1 matrix
    keep = [f]
    for k, t in enumerate(enabled, start=1):
        if t != fired and k != f:
            pos[t] = len(keep)
            keep.append(k)

    # d1 restricted to the fired and persistent rows/columns
    kk = len(keep)
    d1 = [0] * (kk * kk)
    for a, i in enumerate(keep):
        Dif = D[i * m + f]
        row = i * m
        for b, j in enumerate(keep):
            x = D[row + j]
            y = enc_add(Dif, colmin[j])
            d1[a * kk + b] = x if x < y else y

    # re-anchor on the firing instant: the fired clock becomes the reference
    q = len(new_enabled)
    mm = q + 1
    F = [1] * (mm * mm)
    where = []  # per new position: d1 index for persistent, or -tid-1 for new
    for t in new_enabled:
        where.append(pos.get(t, -t - 1))
    for a, wa in enumerate(where, start=1):
        if wa >= 0:
            F[a * mm] = d1[wa * kk]
            F[a] = d1[wa]
        else:
            t = -wa - 1
            F[a * mm] = up[t]
            lot = lo[t]
            if seal and lot == 1:
                lot = 0  # the fresh clock starts strictly after the seal
            F[a] = lot
    for a, wa in enumerate(where, start=1):
        arow = a * mm
        a0 = F[arow]
        for b, wb in enumerate(where, start=1):
            if a == b:
                continue
            if wa >= 0 and wb >= 0:
                F[arow + b] = d1[wa * kk + wb]
            else:
                F[arow + b] = enc_add(a0, F[b])
    return tuple(F)


def build_graph(tts: Tts, max_classes: Optional[int] = None,
                time_budget: Optional[float] = None,
                threads: int = 1) -> ClassGraph:
    """Breadth-first construction of the state-class graph.

    Stops early when a limit is reached and marks the (partial) result;
    verdicts on a partial graph are not conclusive.
    """
    t0 = _time.monotonic()
    scale = compute_scale(tts)
    lo, up = _scaled_bounds(tts, scale)
    dominators = tts.dominators
    g = ClassGraph(tts=tts, scale=scale)

    enabled_cache: dict[tuple, tuple[int, ...]] = {}

    def enabled_of(state: tuple) -> tuple[int, ...]:
        en = enabled_cache.get(state)
        if en is None:
            en = tts.enabled_ids(state)
            enabled_cache[state] = en
        return en

    index: dict[tuple, int] = {}

    def intern(state: tuple, en: tuple[int, ...], D: tuple) -> tuple[int, bool]:
        key = (state, D)
        ci = index.get(key)
        if ci is not None:
            return ci, False
        ci = len(g.states)
        index[key] = ci
        g.states.append(state)
        g.dbms.append(D)
        g.enabled.append(en)
        fi, tfm = firable_of(D, len(en), en, dominators) if en else ((), 0)
        g.firable.append(fi)
        g.tfmask.append(tfm)
        if not en:
            g.dead.add(ci)
        return ci, True

    state0, en0, D0 = initial_class(tts, scale)
    intern(state0, en0, D0)
    frontier: deque[int] = deque([0])

    fire = tts.fire

    trans = tts.transitions

    def expand(ci: int) -> list[tuple[int, int, tuple, tuple]]:
        """(src, tid, new_state, new_dbm) for every firing of class ci."""
        out = []
        state = g.states[ci]
        en = g.enabled[ci]
        D = g.dbms[ci]
        n = len(en)
        for tid in g.firable[ci]:
            fpos = en.index(tid) + 1
            seal = trans[tid].seal
            if seal:
                smask = ((1 << (n + 1)) - 2) & ~(1 << fpos)
            else:
                smask = 0
                dom = dominators[tid]
                if dom:
                    tfm = g.tfmask[ci]
                    for k in range(1, n + 1):
                        if k != fpos and (tfm >> k) & 1 and (dom >> en[k - 1]) & 1:
                            smask |= 1 << k
            for nstate in fire(state, tid):
                nen = enabled_of(nstate)
                nD = successor_domain(D, en, tid, nen, lo, up, smask, seal)
                if nD is None:
                    continue
                out.append((ci, tid, nstate, nD))
        return out

    pool = None
    if threads > 1:
        from concurrent.futures import ThreadPoolExecutor

        pool = ThreadPoolExecutor(max_workers=threads)
    try:
        while frontier:
            if time_budget is not None and _time.monotonic() - t0 > time_budget:
                g.limit_hit = "time_budget"
                break
            if pool is not None:
                batch = []
                while frontier and len(batch) < 4 * threads:
                    batch.append(frontier.popleft())
                results = pool.map(expand, batch)
            else:
                results = (expand(frontier.popleft()),)
            stop = False
            for rs in results:
                for src, tid, nstate, nD in rs:
                    nen = enabled_of(nstate)
                    dst, fresh = intern(nstate, nen, nD)
                    g.edges.append((src, tid, dst))
                    if fresh:
                        frontier.append(dst)
                        if max_classes is not None and len(g.states) >= max_classes:
                            g.limit_hit = "max_classes"
                            stop = True
                            break
                if stop:
                    break
            if stop:
                break
    finally:
        if pool is not None:
            pool.shutdown(wait=False)
    g.elapsed = _time.monotonic() - t0
    return g


# ---------------------------------------------------------------------------
# Reference closure, used by tests to cross-check canonical form


def floyd_warshall(D: list[int], m: int) -> Optional[list[int]]:
    """Full closure; None when a negative cycle makes the domain empty."""
    D = list(D)
    for k in range(m):
        for i in range(m):
            dik = D[i * m + k]
            if dik >= INF_ENC:
                continue
            row = i * m
            krow = k * m
            for j in range(m):
                alt = enc_add(dik, D[krow + j])
                if alt < D[row + j]:
                    D[row + j] = alt
    for i in range(m):
        if D[i * m + i] < 1:
            return None
    return D


# ---------------------------------------------------------------------------
# Discrete-time oracle


class HorizonExceeded(Exception):
    pass


@dataclass(frozen=True)
class OracleResult:
    states: frozenset
    dead: frozenset
    edges: frozenset  # (src_state, tid, dst_state)
    granularity: Fraction
    n_configs: int


def _grid_windows(tts: Tts, g: Fraction):
    """Per transition: firing window and urgency cap in grid units, or None
    when some window misses the grid entirely (caller must refine)."""
    amin = []
    amax = []
    for t in tts.transitions:
        iv = t.interval
        a = iv.lower / g
        if iv.lower_strict:
            lo_u = math.floor(a) + 1
        else:
            lo_u = math.ceil(a)
        if iv.upper is None:
            hi_u = None
        else:
            b = iv.upper / g
            if iv.upper_strict:
                hi_u = math.ceil(b) - 1
            else:
                hi_u = math.floor(b)
            if hi_u < lo_u:
                return None
        amin.append(lo_u)
        amax.append(hi_u)
    return amin, amax


def oracle_explore(tts: Tts, granularity: Optional[Fraction] = None,
                   max_configs: int = 2_000_000) -> OracleResult:
    """Exhaustive exploration of the grid semantics.

    Ages advance in lockstep by one grid unit while no enabled transition is
    pushed past its window; firing resets the ages of newly enabled
    transitions.  Ages of unbounded transitions saturate once the window is
    open, keeping the configuration space finite.
    """
    if granularity is None:
        granularity = Fraction(1, 2 * compute_scale(tts))
    g = granularity
    for _ in range(64):
        w = _grid_windows(tts, g)
        if w is not None:
            break
        g = g / 2
    else:
        raise ValueError("could not refine the grid to hit every window")
    amin, amax = w
    dominators = tts.dominators

    def saturate(t: int, a: int) -> int:
        cap = amax[t]
        if cap is None:
            return min(a, amin[t])
        return a

    def delay_ok(en: tuple[int, ...], ages: tuple[int, ...]) -> bool:
        for k, t in enumerate(en):
            if amax[t] is not None and ages[k] + 1 > amax[t]:
                return False
        return True

    init_state = tts.initial
    en0 = tts.enabled_ids(init_state)
    start = (init_state, en0, (0,) * len(en0), False)
    seen = {(init_state, start[2], False)}
    queue: deque = deque([start])
    states = {init_state}
    dead = set()
    edges = set()
    n_configs = 0

    while queue:
        state, en, ages, sealed = queue.popleft()
        n_configs += 1
        if n_configs > max_configs:
            raise HorizonExceeded(
                f"more than {max_configs} grid configurations"
            )
        if not en:
            dead.add(state)
            continue

        # firing steps; a sealed configuration must let time pass first
        if not sealed:
            fmask = 0
            fset = []
            for k, t in enumerate(en):
                if ages[k] >= amin[t] and (amax[t] is None or ages[k] <= amax[t]):
                    fmask |= 1 << t
                    fset.append(k)
            for k in fset:
                t = en[k]
                if dominators[t] & fmask:
                    continue
                seal = tts.transitions[t].seal
                for nstate in tts.fire(state, t):
                    nen = tts.enabled_ids(nstate)
                    pre = {u: ages[i] for i, u in enumerate(en)}
                    nages = tuple(
                        saturate(u, pre[u]) if u in pre and u != t else 0
                        for u in nen
                    )
                    if seal and nen and not delay_ok(nen, nages):
                        continue  # no run realizes this interleaving
                    states.add(nstate)
                    edges.add((state, t, nstate))
                    key = (nstate, nages, seal)
                    if key not in seen:
                        seen.add(key)
                        queue.append((nstate, nen, nages, seal))

        # delay step
        if delay_ok(en, ages):
            nages = tuple(saturate(t, ages[k] + 1) for k, t in enumerate(en))
            key = (state, nages, False)
            if key not in seen:
                seen.add(key)
                queue.append((state, en, nages, False))

    return OracleResult(
        states=frozenset(states),
        dead=frozenset(dead),
        edges=frozenset(edges),
        granularity=g,
        n_configs=n_configs,
    )


def agreement(graph: ClassGraph, oracle: OracleResult) -> list[str]:
    """Differences between the dense abstraction and the grid oracle."""
    if graph.limit_hit:
        return [f"class graph incomplete: {graph.limit_hit}"]
    diffs = []
    ds = graph.reachable_states()
    if ds != oracle.states:
        extra = len(ds - oracle.states)
        miss = len(oracle.states - ds)
        diffs.append(f"reachable states differ: +{extra} dense-only, +{miss} grid-only")
    dd = graph.dead_states()
    if dd != oracle.dead:
        diffs.append(
            f"dead states differ: +{len(dd - oracle.dead)} dense-only, "
            f"+{len(oracle.dead - dd)} grid-only"
        )
    de = graph.edge_triples()
    if de != oracle.edges:
        diffs.append(
            f"fired edges differ: +{len(de - oracle.edges)} dense-only, "
            f"+{len(oracle.edges - de)} grid-only"
        )
    return diffs


# ---------------------------------------------------------------------------
# Exact run validation (independent of the matrix machinery)


def validate_run(tts: Tts, steps: list[tuple[int, Fraction, Optional[tuple]]]
                 ) -> Optional[str]:
    """Check that (tid, absolute time, expected successor) steps form a valid
    timed run from the initial state.  Returns None, or the first violation.

    Uses only exact rational arithmetic on the declared intervals.
    """
    state = tts.initial
    now = Fraction(0)
    sealed_at: Optional[Fraction] = None
    en_time: dict[int, Fraction] = {t: now for t in tts.enabled_ids(state)}
    for idx, (tid, tau, expected) in enumerate(steps):
        t = tts.transitions[tid]
        if tau < now:
            return f"step {idx}: time decreases"
        if sealed_at is not None and tau == sealed_at:
            return f"step {idx}: fires at an instant sealed by the previous step"
        if tid not in en_time:
            return f"step {idx}: {t.name} is not enabled"
        age = tau - en_time[tid]
        if not t.interval.contains(age):
            return f"step {idx}: {t.name} fired at age {age} outside {t.interval}"
        for u, te in en_time.items():
            iv = tts.transitions[u].interval
            if iv.upper is None:
                continue
            uage = tau - te
            if uage > iv.upper or (uage == iv.upper and iv.upper_strict):
                return (
                    f"step {idx}: waiting until {tau} pushes "
                    f"{tts.transitions[u].name} past its deadline"
                )
        dom = tts.dominators[tid]
        if dom:
            for u, te in en_time.items():
                if u != tid and (dom >> u) & 1:
                    if tts.transitions[u].interval.contains(tau - te):
                        return (
                            f"step {idx}: {tts.transitions[u].name} has priority "
                            f"and is firable"
                        )
        outcomes = tts.fire(state, tid)
        if expected is not None:
            if expected not in outcomes:
                return f"step {idx}: successor state mismatch"
            nstate = expected
        else:
            nstate = outcomes[0]
        nen = tts.enabled_ids(nstate)
        nxt: dict[int, Fraction] = {}
        for u in nen:
            if u in en_time and u != tid:
                nxt[u] = en_time[u]
            else:
                nxt[u] = tau
        en_time = nxt
        state = nstate
        now = tau
        sealed_at = tau if t.seal else None
    return None


# ---------------------------------------------------------------------------
# Random systems for differential testing


def random_tts(seed: int) -> Tts:
    """Small random token system with interval-timed transitions.

    Places are boolean slots; a transition consumes its preset and produces
    its postset.  Bounds are small rationals, occasionally strict, so both
    the matrix arithmetic and the grid refinement get exercised.
    """
    rng = random.Random(seed)
    n_places = rng.randint(3, 6)
    n_trans = rng.randint(2, 4)

    tts = Tts()
    tts.n_inst = 0
    tts.instance_names = []
    tts.var_names = [f"p{i}" for i in range(n_places)]
    tts.var_pretty = [lambda v: str(v)] * n_places
    tts.initial = tuple(rng.randint(0, 1) for _ in range(n_places))

    def mk_interval() -> TimeInterval:
        # integer bounds at most 4; strict ends still force grid refinement
        lo = rng.choice([0, 0, 1, 2])
        width = rng.choice([0, 1, 1, 2, None])
        if width is None:
            return TimeInterval(Fraction(lo), None, False, True)
        lo_strict = width >= 1 and rng.random() < 0.2
        up_strict = width >= 1 and rng.random() < 0.2
        if width == 0:
            lo_strict = up_strict = False
        return TimeInterval(Fraction(lo), Fraction(lo) + width, lo_strict, up_strict)

    for tid in range(n_trans):
        pre = tuple(sorted(rng.sample(range(n_places), rng.randint(1, 2))))
        post = tuple(sorted(rng.sample(range(n_places), rng.randint(0, 2))))

        def guard(s, _pre=pre):
            for p in _pre:
                if not s[p]:
                    return False
            return True

        def update(s, _pre=pre, _post=post):
            out = list(s)
            for p in _pre:
                out[p] = 0
            for p in _post:
                out[p] = 1
            return (tuple(out),)

        iv = mk_interval()
        tts.transitions.append(
            Transition(tid=tid, event=f"e{tid}", parts=(), guard=guard,
                       update=update, interval=iv, pretty=f"e{tid}",
                       name=f"e{tid}")
        )
        tts.port_tids[f"e{tid}"] = frozenset([tid])

    # a few acyclic priorities: lower tid dominates higher tid; dominators
    # must carry point intervals (the engine's exactness condition)
    points = [
        t.tid for t in tts.transitions
        if t.interval.upper is not None and t.interval.upper == t.interval.lower
    ]
    dominators = [0] * n_trans
    for _ in range(rng.randint(0, 2)):
        if not points:
            break
        hi = rng.choice(points)
        lo_t = rng.randrange(n_trans)
        if hi < lo_t:
            dominators[lo_t] |= 1 << hi
    # transitive closure over the tid order (hi < lo implies acyclic)
    for t in range(n_trans):
        mask = dominators[t]
        for h in range(t):
            if (mask >> h) & 1:
                mask |= dominators[h]
        dominators[t] = mask
    tts.dominators = dominators
    return tts
