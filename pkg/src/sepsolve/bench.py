"""Benchmark instance generators, the suboptimality filter, the experiment
harness and its CSV schema.

Three instance families: a max-cut reduction with three terminals, planted
clique instances, and sparse graphs with scattered contracted terminals.
All generators are deterministic functions of their seed.
"""

from __future__ import annotations

import logging
import math
import random
import time
from collections import deque
from dataclasses import dataclass

from .graphs import (
    Graph,
    InfeasibleInstanceError,
    MwcInstance,
    isolating_cut_approx,
    connected_components,
)

log = logging.getLogger(__name__)


# ---------------------------------------------------------------------------
# max-cut reduction
# ---------------------------------------------------------------------------

SOURCE_GRAPHS = {
    "k2": (2, [(0, 1)]),
    "k3": (3, [(0, 1), (0, 2), (1, 2)]),
    "k4": (4, [(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)]),
    "c4": (4, [(0, 1), (1, 2), (2, 3), (3, 0)]),
    "c5": (5, [(0, 1), (1, 2), (2, 3), (3, 4), (4, 0)]),
    "p3": (3, [(0, 1), (1, 2)]),
    "bull": (5, [(0, 1), (0, 2), (1, 2), (0, 3), (1, 4)]),
    "pan": (5, [(0, 1), (1, 2), (2, 3), (3, 0), (0, 4)]),
}

# Per-edge gadget: two asymmetric internal pairs (one the mirror image of
# the other) around the edge's endpoints.  Weighted profile over endpoint
# sides: 12 when equal, 11 when split; per-vertex pins of weight 2*deg to
# both cut terminals add 2*deg per vertex for any proper assignment and
# strictly dominate every improper state (third terminal, limbo, deleting
# an endpoint).  Hence OPT = 16*m - maxcut(source).
MAXCUT_COST_PER_EDGE = 16


class _Builder:
    """Incremental unweighted graph builder with clique blobs and weighted
    soft ties realized as parallel length-two paths.

    Attachments rotate over blob members across all calls, so each member
    hosts at most one tie (a deleted member then severs at most one weight
    unit, which keeps the weighted cost analysis exact).
    """

    def __init__(self):
        self.n = 0
        self.edges: list[tuple[int, int]] = []
        self._rot: dict[int, int] = {}

    def vertex(self) -> int:
        v = self.n
        self.n += 1
        return v

    def edge(self, u: int, v: int):
        self.edges.append((u, v))

    def blob(self, size: int) -> list[int]:
        vs = [self.vertex() for _ in range(size)]
        for i, a in enumerate(vs):
            for b in vs[i + 1:]:
                self.edge(a, b)
        return vs

    def _attach(self, members) -> int:
        key = members[0]
        i = self._rot.get(key, 0)
        self._rot[key] = i + 1
        return members[i % len(members)]

    def soft(self, a_members, b_members, weight: int):
        """weight parallel 2-paths between the two (blob) endpoints."""
        la, lb = list(a_members), list(b_members)
        for _ in range(weight):
            s = self.vertex()
            self.edge(self._attach(la), s)
            self.edge(s, self._attach(lb))

    def graph(self) -> Graph:
        return Graph.build(self.n, self.edges)


def gen_maxcut(source: Graph | str) -> MwcInstance:
    """Three-terminal vertex-deletion instance encoding max cut.

    The optimum of the result equals 16*m - maxcut(source); the decode is
    exercised directly in the tests.
    """
    if isinstance(source, str):
        n_src, edges_src = SOURCE_GRAPHS[source]
        source = Graph.build(n_src, edges_src)
    b = _Builder()
    t1, t2, t3 = b.vertex(), b.vertex(), b.vertex()
    deg = [source.degree(v) for v in range(source.n)]
    xblob: list[list[int]] = []
    for v in range(source.n):
        size = 7 * max(deg[v], 1) + 1
        blob = b.blob(size)
        xblob.append(blob)
        b.soft(blob, [t1], 2 * deg[v])
        b.soft(blob, [t2], 2 * deg[v])
    for u, v in sorted(source.edges):
        for xu, xv in ((u, v), (v, u)):
            # internal pair: g leans on xu/t2/t3, h leans on xv/t1/t3
            g = b.blob(7)
            h = b.blob(7)
            b.soft(g, xblob[xu], 1)
            b.soft(g, [t2], 2)
            b.soft(g, [t3], 2)
            b.soft(h, xblob[xv], 1)
            b.soft(h, [t1], 2)
            b.soft(h, [t3], 2)
            b.soft(g, h, 1)
    return MwcInstance(b.graph(), (t1, t2, t3))


def maxcut_value(g: Graph) -> int:
    """Brute-force maximum cut of a small graph."""
    best = 0
    for mask in range(1 << max(g.n - 1, 0)):
        cut = sum(
            1
            for u, v in g.edges
            if ((mask >> u) & 1) != ((mask >> v) & 1)
        )
        best = max(best, cut)
    return best


def decode_maxcut(source: Graph, opt: int) -> int:
    """Invert the reduction's accounting: maxcut = 16*m - OPT."""
    return MAXCUT_COST_PER_EDGE * source.m - opt


# ---------------------------------------------------------------------------
# planted instances
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class PlantedParams:
    t: int
    a: int
    b: int
    p: float
    seed: int = 0

    def __post_init__(self):
        if not (self.t >= 2 and self.a >= 1 and self.b >= 1):
            raise ValueError("need t >= 2, a >= 1, b >= 1")
        if not 0.0 <= self.p <= 1.0:
            raise ValueError("p must lie in [0, 1]")

    @property
    def guarantee_holds(self) -> bool:
        """The core clique is the unique minimum solution only when a < (t-1) b."""
        return self.a < (self.t - 1) * self.b

    @property
    def name(self) -> str:
        return f"planted_{self.a:03d}_{self.t:03d}_{self.b:03d}_{int(round(self.p * 100))}"


def gen_planted(params: PlantedParams) -> MwcInstance:
    """Core clique of size a, t satellite cliques of size b each fully
    adjacent to the core and to a private terminal; every one of these
    edges (terminal attachments included) is kept independently with
    probability p.  Terminals that end up isolated force a regeneration
    under the next seed, which is logged.
    """
    seed = params.seed
    while True:
        rng = random.Random(seed)
        t, a, bb, p = params.t, params.a, params.b, params.p
        n = t + a + t * bb
        terminals = list(range(t))
        core = list(range(t, t + a))
        sats = [
            list(range(t + a + i * bb, t + a + (i + 1) * bb)) for i in range(t)
        ]
        edges = []

        def keep() -> bool:
            return p >= 1.0 or rng.random() < p

        for i, u in enumerate(core):
            for v in core[i + 1:]:
                if keep():
                    edges.append((u, v))
        for i in range(t):
            sat = sats[i]
            for j, u in enumerate(sat):
                for v in sat[j + 1:]:
                    if keep():
                        edges.append((u, v))
            for u in sat:
                for v in core:
                    if keep():
                        edges.append((u, v))
            for u in sat:
                if keep():
                    edges.append((terminals[i], u))
        g = Graph.build(n, edges)
        if all(g.degree(tv) > 0 for tv in terminals):
            return MwcInstance(g, tuple(terminals))
        log.info("planted %s: isolated terminal under seed %d, retrying", params.name, seed)
        seed += 1


# ---------------------------------------------------------------------------
# sparse instances
# ---------------------------------------------------------------------------


def _bfs_dist(g: Graph, s: int) -> dict[int, int]:
    dist = {s: 0}
    dq = deque([s])
    while dq:
        u = dq.popleft()
        for w in g.adj[u]:
            if w not in dist:
                dist[w] = dist[u] + 1
                dq.append(w)
    return dist


def _scattered_set(g: Graph, want: int | None, rng: random.Random, restarts: int = 100):
    """Random greedy 5-scattered set; None means maximal."""
    best: list[int] = []
    for _ in range(restarts):
        order = list(range(g.n))
        rng.shuffle(order)
        chosen: list[int] = []
        banned: set[int] = set()
        for v in order:
            if v in banned:
                continue
            chosen.append(v)
            if want is not None and len(chosen) == want:
                break
            near = _ball(g, v, 4)
            banned.update(near)
        if want is None:
            if len(chosen) > len(best):
                best = chosen
        elif len(chosen) >= want:
            return chosen[:want]
    if want is None and best:
        return best
    return None


def _ball(g: Graph, s: int, radius: int) -> set[int]:
    dist = {s: 0}
    dq = deque([s])
    while dq:
        u = dq.popleft()
        if dist[u] == radius:
            continue
        for w in g.adj[u]:
            if w not in dist:
                dist[w] = dist[u] + 1
                dq.append(w)
    return set(dist)


class GenerationFailed(RuntimeError):
    pass


def gen_sparse(g: Graph, t_mode, seed: int = 0) -> MwcInstance:
    """Pick a 5-scattered terminal set and contract each terminal's
    neighborhood onto it; t_mode is 3, 4, 5 or "max"."""
    rng = random.Random(seed)
    want = None if t_mode in ("max", 0) else int(t_mode)
    chosen = _scattered_set(g, want, rng)
    if not chosen or (want is not None and len(chosen) < want):
        raise GenerationFailed(f"no 5-scattered set of size {t_mode}")
    chosen = sorted(chosen)
    # contract N(s) onto s: s inherits the second neighborhood
    absorbed = {}
    for s in chosen:
        for w in g.adj[s]:
            absorbed[w] = s
    edges = []
    for u, v in g.edges:
        uu = absorbed.get(u, u)
        vv = absorbed.get(v, v)
        if uu != vv:
            edges.append((uu, vv))
    keep = [v for v in range(g.n) if v not in absorbed or v in chosen]
    gg = Graph.build(g.n, edges)
    sub, order = gg.induced(keep)
    back = {old: new for new, old in enumerate(order)}
    terms = tuple(back[s] for s in chosen)
    return MwcInstance(sub, terms)


# ---------------------------------------------------------------------------
# suboptimality filter
# ---------------------------------------------------------------------------


def filter_suboptimal(inst: MwcInstance, opt_solver, timeout: float | None = None):
    """True iff the isolating-cut approximation is suboptimal on inst.

    opt_solver(inst, timeout) must return the optimum or None on timeout;
    returns None (undetermined) in the latter case.
    """
    try:
        appx = len(isolating_cut_approx(inst))
    except InfeasibleInstanceError:
        return False
    opt = opt_solver(inst, timeout)
    if opt is None:
        return None
    return appx > opt


# ---------------------------------------------------------------------------
# experiment harness
# ---------------------------------------------------------------------------

CSV_FIELDS = [
    "test",
    "n",
    "m",
    "t",
    "LB1",
    "LB2",
    "OPT",
    "APPX",
    "PRE_DEL",
    "PRE_UNDEL",
    "PRE_RES_TERMS",
    "PRE_LEFT_TERM",
    "PRE_LEFT_DEG",
    "PRE_LEFT_OPT",
]

VARIANT_ORDER = [
    "csp",
    "csp_cc",
    "csp_lb1",
    "csp_lb1_cc",
    "csp_lb2",
    "csp_lb2_cc",
    "impsep",
    "impsep_cc",
]


def format_runtime(seconds: float | None) -> str:
    """M:SS.cc below one hour, H:MM:SS above; '-' for a timeout."""
    if seconds is None:
        return "-"
    if seconds < 3600:
        m = int(seconds // 60)
        s = seconds - 60 * m
        return f"{m}:{s:05.2f}"
    h = int(seconds // 3600)
    m = int((seconds - 3600 * h) // 60)
    s = int(seconds - 3600 * h - 60 * m)
    return f"{h}:{m:02d}:{s:02d}"


def run_experiments(instances, variants, timeout: float | None = None) -> str:
    """One CSV row per instance: basic statistics, preprocessing counts and
    per-variant runtimes ('-' on timeout).  `instances` yields
    (name, MwcInstance) pairs; unreadable entries may pass (name, None)
    and produce an error row.
    """
    from .branching import SolverVariant, solve_optimum
    from .frontends import mwc_preprocess_full, mwc_simple_preprocess, mwc_to_csp
    from .impsep import solve_mwc_impsep

    for v in variants:
        if v not in VARIANT_ORDER:
            raise ValueError(f"unknown variant {v!r}")
    header = CSV_FIELDS + [v for v in VARIANT_ORDER if v in variants]
    rows = []
    for name, inst in instances:
        if inst is None:
            rows.append([name] + ["ERR"] * (len(header) - 1))
            continue
        g = inst.graph
        row = {
            "test": name,
            "n": g.n,
            "m": g.m,
            "t": len(inst.terminals),
        }
        try:
            appx = len(isolating_cut_approx(inst))
        except InfeasibleInstanceError:
            rows.append([name] + ["ERR"] * (len(header) - 1))
            continue
        row["APPX"] = appx
        pre = mwc_preprocess_full(inst)
        row["PRE_DEL"] = pre.pre_del
        row["PRE_UNDEL"] = len(pre.undeletable)
        row["PRE_RES_TERMS"] = pre.resolved_terminals
        row["PRE_LEFT_TERM"] = pre.left_terminals
        row["PRE_LEFT_DEG"] = pre.left_degree
        forced, red = mwc_simple_preprocess(inst)
        csp = mwc_to_csp(red)
        from .branching import root_bounds

        lb1, lb2, _, _ = root_bounds(csp)
        row["LB1"] = lb1
        row["LB2"] = lb2
        opt = None
        runtimes: dict[str, float | None] = {}
        for label in VARIANT_ORDER:
            if label not in variants:
                continue
            start = time.monotonic()
            got = None
            if label.startswith("impsep"):
                res = solve_mwc_impsep(
                    inst, split_components=label.endswith("_cc"), timeout=timeout
                )
                got = res.opt if not res.timed_out else None
            else:
                lb = {"csp": "none", "csp_lb1": "lb1", "csp_lb2": "lb2"}[
                    label.replace("_cc", "")
                ]
                var = SolverVariant(lb, label.endswith("_cc"))
                res = solve_optimum(csp, var, timeout=timeout, upper_hint=appx)
                got = None if res.timed_out or res.opt is None else len(forced) + res.opt
            elapsed = time.monotonic() - start
            runtimes[label] = None if got is None else elapsed
            if got is not None:
                if opt is not None and got != opt:
                    raise AssertionError(
                        f"{name}: variants disagree on the optimum ({opt} vs {got})"
                    )
                opt = got
        row["OPT"] = opt if opt is not None else "-"
        row["PRE_LEFT_OPT"] = (
            opt - pre.pre_del if opt is not None else "-"
        )
        out = [str(row.get(f, "-")) for f in CSV_FIELDS]
        out += [format_runtime(runtimes.get(v)) for v in VARIANT_ORDER if v in variants]
        rows.append(out)
    rows.sort(key=lambda r: r[0])
    lines = [",".join(header)]
    lines += [",".join(r) for r in rows]
    return "\n".join(lines) + "\n"
