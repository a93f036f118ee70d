"""Undirected graphs, instance file I/O, vertex-capacitated cuts and the
isolating-cut approximation for multiway cut.

Vertex ids are 0-based everywhere.  Graphs are immutable after construction;
all operations here are pure functions of their inputs.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field


class ParseError(ValueError):
    """Malformed instance file.  Carries the 1-based offending line."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class UncuttableError(RuntimeError):
    """A source is adjacent to a sink, so no vertex cut exists."""


class InfeasibleInstanceError(RuntimeError):
    """The instance admits no solution at any budget (terminal-terminal edge)."""


@dataclass(frozen=True)
class Graph:
    """Simple undirected graph: no loops, no multi-edges, ids in [0, n)."""

    n: int
    edges: frozenset[tuple[int, int]]
    adj: tuple[tuple[int, ...], ...] = field(repr=False)

    @staticmethod
    def build(n: int, edge_iter) -> "Graph":
        """Normalize an edge list: drop loops and duplicates, check ranges."""
        seen: set[tuple[int, int]] = set()
        for u, v in edge_iter:
            if not (0 <= u < n and 0 <= v < n):
                raise ValueError(f"edge ({u},{v}) out of range for n={n}")
            if u == v:
                continue
            seen.add((u, v) if u < v else (v, u))
        neigh: list[list[int]] = [[] for _ in range(n)]
        for u, v in seen:
            neigh[u].append(v)
            neigh[v].append(u)
        return Graph(n, frozenset(seen), tuple(tuple(sorted(ns)) for ns in neigh))

    @property
    def m(self) -> int:
        return len(self.edges)

    def degree(self, v: int) -> int:
        return len(self.adj[v])

    def has_edge(self, u: int, v: int) -> bool:
        return ((u, v) if u < v else (v, u)) in self.edges

    def remove_vertices(self, drop) -> "Graph":
        """Same vertex-id space, with `drop` isolated (edges removed)."""
        drop = set(drop)
        return Graph.build(
            self.n, (e for e in self.edges if e[0] not in drop and e[1] not in drop)
        )

    def induced(self, keep) -> tuple["Graph", list[int]]:
        """Induced subgraph on `keep`; returns (graph, new-id -> old-id)."""
        order = sorted(set(keep))
        back = {old: new for new, old in enumerate(order)}
        edges = [
            (back[u], back[v])
            for u, v in self.edges
            if u in back and v in back
        ]
        return Graph.build(len(order), edges), order


@dataclass(frozen=True)
class OctInstance:
    graph: Graph
    budget: int | None = None

    def __post_init__(self):
        if self.budget is not None and not (0 <= self.budget <= self.graph.n):
            raise ValueError("budget must lie in [0, n]")


@dataclass(frozen=True)
class MwcInstance:
    graph: Graph
    terminals: tuple[int, ...]
    budget: int | None = None

    def __post_init__(self):
        seen = set()
        for t in self.terminals:
            if not 0 <= t < self.graph.n:
                raise ValueError(f"terminal {t} out of range")
            if t in seen:
                raise ValueError(f"terminal {t} listed twice")
            seen.add(t)
        if self.budget is not None and self.budget < 0:
            raise ValueError("budget must be nonnegative")


# ---------------------------------------------------------------------------
# instance file formats
# ---------------------------------------------------------------------------

def _split_ints(text: str, lineno: int, expect: int) -> list[int]:
    parts = text.split()
    if len(parts) != expect:
        raise ParseError(f"expected {expect} integers, got {len(parts)}", lineno)
    try:
        return [int(p) for p in parts]
    except ValueError:
        raise ParseError(f"non-integer token in {parts!r}", lineno) from None


def parse_oct(text: str) -> OctInstance:
    """Parse the plain edge-list format: first line "n m", then m lines "u v".

    Duplicate edges and loops are dropped silently.  Files that index
    vertices from 1 are detected heuristically (some id equals n while
    none equals... all ids in [1, n]) and shifted down.
    """
    lines = [ln for ln in text.splitlines()]
    if not lines or not lines[0].strip():
        raise ParseError("empty input", 1)
    n, m = _split_ints(lines[0], 1, 2)
    if n < 0 or m < 0:
        raise ParseError("negative header counts", 1)
    raw: list[tuple[int, int]] = []
    count = 0
    for i, ln in enumerate(lines[1:], start=2):
        if not ln.strip():
            continue
        if count >= m:
            raise ParseError("more edge lines than declared", i)
        u, v = _split_ints(ln, i, 2)
        raw.append((u, v))
        count += 1
    if count < m:
        raise ParseError(f"declared {m} edges, found {count}", len(lines))
    ids = [x for e in raw for x in e]
    one_indexed = bool(ids) and max(ids) == n and min(ids) >= 1
    if one_indexed:
        raw = [(u - 1, v - 1) for u, v in raw]
    for i, (u, v) in enumerate(raw, start=2):
        if not (0 <= u < n and 0 <= v < n):
            raise ParseError(f"vertex id out of range in edge ({u},{v})", i)
    return OctInstance(Graph.build(n, raw))


def write_oct(inst: OctInstance) -> str:
    g = inst.graph
    lines = [f"{g.n} {g.m}"]
    lines += [f"{u} {v}" for u, v in sorted(g.edges)]
    return "\n".join(lines) + "\n"


def parse_mwc(text: str) -> MwcInstance:
    """Parse "n m t" header, t terminal lines, then m edge lines."""
    lines = text.splitlines()
    if not lines or not lines[0].strip():
        raise ParseError("empty input", 1)
    n, m, t = _split_ints(lines[0], 1, 3)
    body = [(i, ln) for i, ln in enumerate(lines[1:], start=2) if ln.strip()]
    if len(body) != t + m:
        raise ParseError(f"expected {t} terminal and {m} edge lines, got {len(body)}")
    terms: list[int] = []
    for i, ln in body[:t]:
        (x,) = _split_ints(ln, i, 1)
        if not 0 <= x < n:
            raise ParseError(f"terminal id {x} out of range", i)
        if x in terms:
            raise ParseError(f"terminal {x} listed twice", i)
        terms.append(x)
    edges = []
    for i, ln in body[t:]:
        u, v = _split_ints(ln, i, 2)
        if not (0 <= u < n and 0 <= v < n):
            raise ParseError(f"vertex id out of range in edge ({u},{v})", i)
        edges.append((u, v))
    return MwcInstance(Graph.build(n, edges), tuple(terms))


def write_mwc(inst: MwcInstance) -> str:
    g = inst.graph
    lines = [f"{g.n} {g.m} {len(inst.terminals)}"]
    lines += [str(t) for t in inst.terminals]
    lines += [f"{u} {v}" for u, v in sorted(g.edges)]
    return "\n".join(lines) + "\n"


def parse_opt(text: str) -> list[int]:
    """Companion .opt file: first line solution size, second line the vertices."""
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if not lines:
        raise ParseError("empty .opt file", 1)
    (size,) = _split_ints(lines[0], 1, 1)
    if size == 0:
        return []
    if len(lines) < 2:
        raise ParseError("missing solution line", 2)
    sol = _split_ints(lines[1], 2, size)
    return sol


def write_opt(solution) -> str:
    sol = sorted(solution)
    if not sol:
        return "0\n\n"
    return f"{len(sol)}\n{' '.join(str(v) for v in sol)}\n"


# ---------------------------------------------------------------------------
# connectivity
# ---------------------------------------------------------------------------

def connected_components(g: Graph, alive=None) -> list[list[int]]:
    """Maximal connected vertex sets, sorted by smallest member."""
    if alive is None:
        alive_set = None
    else:
        alive_set = set(alive)
    seen: set[int] = set()
    comps: list[list[int]] = []
    for s in range(g.n):
        if s in seen or (alive_set is not None and s not in alive_set):
            continue
        comp = [s]
        seen.add(s)
        dq = deque([s])
        while dq:
            u = dq.popleft()
            for w in g.adj[u]:
                if w in seen or (alive_set is not None and w not in alive_set):
                    continue
                seen.add(w)
                comp.append(w)
                dq.append(w)
        comps.append(sorted(comp))
    return comps


# ---------------------------------------------------------------------------
# vertex-capacitated flow
# ---------------------------------------------------------------------------
#
# The classic vertex-splitting reduction: every vertex v becomes an arc
# v_in -> v_out of capacity 1 (infinite for protected vertices); every arc
# (u, v) of the instance becomes u_out -> v_in of infinite capacity.  Unit
# augmenting paths by BFS are enough at the scales this package targets.

_INF = 1 << 30


class _FlowNet:
    def __init__(self, num_nodes: int):
        self.head: list[list[int]] = [[] for _ in range(num_nodes)]
        self.to: list[int] = []
        self.cap: list[int] = []

    def add(self, u: int, v: int, c: int):
        self.head[u].append(len(self.to))
        self.to.append(v)
        self.cap.append(c)
        self.head[v].append(len(self.to))
        self.to.append(u)
        self.cap.append(0)

    def bfs_augment(self, s: int, t: int) -> bool:
        prev_edge = {s: -1}
        dq = deque([s])
        while dq:
            u = dq.popleft()
            if u == t:
                break
            for ei in self.head[u]:
                v = self.to[ei]
                if self.cap[ei] > 0 and v not in prev_edge:
                    prev_edge[v] = ei
                    dq.append(v)
        if t not in prev_edge:
            return False
        v = t
        while v != s:
            ei = prev_edge[v]
            self.cap[ei] -= 1
            self.cap[ei ^ 1] += 1
            v = self.to[ei ^ 1]
        return True

    def reachable(self, s: int) -> set[int]:
        seen = {s}
        dq = deque([s])
        while dq:
            u = dq.popleft()
            for ei in self.head[u]:
                v = self.to[ei]
                if self.cap[ei] > 0 and v not in seen:
                    seen.add(v)
                    dq.append(v)
        return seen


def vertex_flow(
    n: int,
    arcs,
    sources,
    sinks,
    deletable=None,
    limit: int | None = None,
) -> tuple[int, set[int], set[int]]:
    """Max set of vertex-disjoint source-to-sink paths in a digraph.

    `arcs` is an iterable of directed pairs; for an undirected graph pass
    both orientations.  `deletable` limits which vertices may carry cut
    capacity 1 (others are uncuttable).  Returns (value, cut, src_side)
    where cut is a minimum vertex cut drawn from `deletable` and src_side
    is the residual reachability (in-node half) used to derive
    closest/furthest cuts.  `limit` stops early once the value exceeds it.
    """
    sources = set(sources)
    sinks = set(sinks)
    if sources & sinks:
        raise ValueError("sources and sinks overlap")
    if deletable is None:
        deletable = set(range(n)) - sources - sinks
    else:
        deletable = set(deletable)
    S, T = 2 * n, 2 * n + 1
    net = _FlowNet(2 * n + 2)
    for v in range(n):
        net.add(2 * v, 2 * v + 1, 1 if v in deletable else _INF)
    for u, v in arcs:
        net.add(2 * u + 1, 2 * v, _INF)
    for s in sources:
        net.add(S, 2 * s, _INF)
    for t in sinks:
        net.add(2 * t + 1, T, _INF)
    value = 0
    while net.bfs_augment(S, T):
        value += 1
        if limit is not None and value > limit:
            return value, set(), set()
    reach = net.reachable(S)
    cut = {v for v in deletable if 2 * v in reach and 2 * v + 1 not in reach}
    src_side = {v for v in range(n) if 2 * v in reach}
    if value >= _INF:
        raise UncuttableError("no finite vertex cut separates sources from sinks")
    return value, cut, src_side


def _undirected_arcs(g: Graph):
    for u, v in g.edges:
        yield u, v
        yield v, u


def min_vertex_cut(g: Graph, sources, sinks) -> tuple[int, set[int]]:
    """Minimum vertex cut between disjoint vertex sets of an undirected graph.

    Cut vertices are drawn from V minus sources minus sinks; a direct
    source-sink edge makes the pair uncuttable.
    """
    sources = set(sources)
    sinks = set(sinks)
    for s in sources:
        for w in g.adj[s]:
            if w in sinks:
                raise UncuttableError(f"source {s} adjacent to sink {w}")
    value, cut, _ = vertex_flow(g.n, _undirected_arcs(g), sources, sinks)
    return value, cut


def min_vertex_cut_furthest(g: Graph, sources, sinks, alive=None) -> tuple[int, set[int]]:
    """Like min_vertex_cut but returns the cut with maximal source side.

    Computed from sink-side reachability in the reverse residual network,
    i.e. the unique minimum cut closest to the sinks.
    """
    sources = set(sources)
    sinks = set(sinks)
    if alive is None:
        alive = set(range(g.n))
    else:
        alive = set(alive)
    for s in sources:
        for w in g.adj[s]:
            if w in sinks and w in alive:
                raise UncuttableError(f"source {s} adjacent to sink {w}")
    arcs = [(u, v) for u, v in _undirected_arcs(g) if u in alive and v in alive]
    deletable = alive - sources - sinks
    n = g.n
    S, T = 2 * n, 2 * n + 1
    net = _FlowNet(2 * n + 2)
    for v in range(n):
        net.add(2 * v, 2 * v + 1, 1 if v in deletable else _INF)
    for u, v in arcs:
        net.add(2 * u + 1, 2 * v, _INF)
    for s in sources:
        if s in alive:
            net.add(S, 2 * s, _INF)
    for t in sinks:
        if t in alive:
            net.add(2 * t + 1, T, _INF)
    value = 0
    while net.bfs_augment(S, T):
        value += 1
    if value >= _INF:
        raise UncuttableError("no finite cut")
    # walk the residual backwards from T; cut = arcs entering the co-reachable set
    co = _co_reachable(net, T)
    cut = {v for v in deletable if 2 * v + 1 in co and 2 * v not in co}
    return value, cut


def _co_reachable(net: _FlowNet, t: int) -> set[int]:
    seen = {t}
    dq = deque([t])
    while dq:
        u = dq.popleft()
        for ei in net.head[u]:
            # edge ei leaves u; its partner ei^1 enters u with residual cap[ei^1]
            v = net.to[ei]
            if net.cap[ei ^ 1] > 0 and v not in seen:
                seen.add(v)
                dq.append(v)
    return seen


# ---------------------------------------------------------------------------
# isolating-cut approximation
# ---------------------------------------------------------------------------

def is_multiway_cut(inst: MwcInstance, cut) -> bool:
    """Every component of G - cut contains at most one terminal, cut avoids T."""
    cut = set(cut)
    if cut & set(inst.terminals):
        return False
    alive = set(range(inst.graph.n)) - cut
    for comp in connected_components(inst.graph, alive):
        if len(set(comp) & set(inst.terminals)) > 1:
            return False
    return True


def isolating_cut_approx(inst: MwcInstance) -> set[int]:
    """Separate each terminal in ascending id order by a minimum cut.

    Cuts accumulate: each round works in the graph minus the vertices cut
    so far.  The union is a valid multiway cut (verified by the caller's
    checker in tests); a terminal-terminal edge makes it infeasible.
    """
    g = inst.graph
    terms = sorted(inst.terminals)
    for t in terms:
        for w in g.adj[t]:
            if w in inst.terminals and w != t:
                raise InfeasibleInstanceError("terminal-terminal edge")
    removed: set[int] = set()
    for t in terms:
        others = [x for x in terms if x != t]
        if not others:
            break
        alive = set(range(g.n)) - removed
        # skip terminals already separated from the rest
        comp = _component_of(g, t, alive)
        rest = [x for x in others if x in comp]
        if not rest:
            continue
        sub_alive = alive
        arcs = [
            (u, v)
            for u, v in _undirected_arcs(g)
            if u in sub_alive and v in sub_alive
        ]
        value, cut, _ = vertex_flow(
            g.n, arcs, {t}, set(rest), deletable=sub_alive - set(terms)
        )
        removed |= cut
    return removed


def _component_of(g: Graph, s: int, alive: set[int]) -> set[int]:
    seen = {s}
    dq = deque([s])
    while dq:
        u = dq.popleft()
        for w in g.adj[u]:
            if w in alive and w not in seen:
                seen.add(w)
                dq.append(w)
    return seen
