"""Multiway cut by branching over important separators.

An X-Y separator S is important when it is (inclusion-)minimal and no
separator S' with |S'| <= |S| has a strictly larger X-side reachability.
At most 4^k of size at most k exist, and some minimum multiway cut always
contains an important separator isolating any chosen terminal, which
yields the classic branching scheme.
"""

from __future__ import annotations

import time
from collections import deque
from dataclasses import dataclass

from .graphs import (
    Graph,
    MwcInstance,
    UncuttableError,
    connected_components,
    vertex_flow,
)
from .frontends import mwc_simple_preprocess


@dataclass(frozen=True)
class ImportantSeparatorQuery:
    graph: Graph
    sources: frozenset[int]
    sinks: frozenset[int]
    k: int

    def __post_init__(self):
        if self.sources & self.sinks:
            raise ValueError("sources and sinks overlap")


class ImpsepTimeout(Exception):
    pass


def _reach(g: Graph, seeds, blocked: set[int], alive: set[int]) -> set[int]:
    seen = set(s for s in seeds if s in alive and s not in blocked)
    dq = deque(seen)
    while dq:
        u = dq.popleft()
        for w in g.adj[u]:
            if w in alive and w not in blocked and w not in seen:
                seen.add(w)
                dq.append(w)
    return seen


def _min_cut(g: Graph, X: set[int], Y: set[int], alive: set[int]):
    """(value, furthest cut) within the alive subgraph; endpoints uncuttable."""
    arcs = []
    for u, v in g.edges:
        if u in alive and v in alive:
            arcs.append((u, v))
            arcs.append((v, u))
    for x in X:
        for w in g.adj[x]:
            if w in Y and w in alive:
                raise UncuttableError("source adjacent to sink")
    value, _, src_side = vertex_flow(
        g.n, arcs, X, Y, deletable=alive - X - Y
    )
    # furthest cut: co-reachability from the sink side of the residual network
    # is equivalent to: vertices just outside the maximal source side
    return value, src_side


def _min_cut_set(g: Graph, X: set[int], Y: set[int], alive: set[int]):
    """(value, some minimum cut) within the alive subgraph."""
    arcs = []
    for u, v in g.edges:
        if u in alive and v in alive:
            arcs.append((u, v))
            arcs.append((v, u))
    for x in X:
        for w in g.adj[x]:
            if w in Y and w in alive:
                raise UncuttableError("source adjacent to sink")
    value, cut, _ = vertex_flow(g.n, arcs, X, Y, deletable=alive - X - Y)
    return value, cut


def enumerate_important_separators(q: ImportantSeparatorQuery) -> list[frozenset[int]]:
    """All important X-Y separators of size at most k (exact set).

    Standard recursion: compute the furthest minimum cut C, branch on a
    vertex v of C being inside the separator (delete v, k-1) or on the
    X side (grow X).  Candidates are filtered by the importance
    definition afterwards, which keeps the enumeration honest even where
    the recursion yields extras.
    """
    g = q.graph
    alive0 = set(range(g.n))
    out: set[frozenset[int]] = set()

    def rec(X: set[int], committed: frozenset[int], k: int, alive: set[int]):
        try:
            lam, _ = _min_cut(g, X, set(q.sinks), alive)
        except UncuttableError:
            return
        if lam > k:
            return
        if lam == 0:
            out.add(committed)
            return
        cut = _furthest_min_cut(g, X, set(q.sinks), alive, lam)
        out.add(committed | cut)
        v = min(cut)
        # v inside the separator
        rec(X, committed | {v}, k - 1, alive - {v})
        # v outside: it joins the X side
        rec(X | {v}, committed, k, alive)

    for x in q.sources:
        for w in g.adj[x]:
            if w in q.sinks:
                raise UncuttableError("source adjacent to sink")
    rec(set(q.sources), frozenset(), q.k, alive0)
    result = [S for S in out if len(S) <= q.k]
    result = [S for S in result if _is_separator(g, q, S)]
    result = [S for S in result if _is_minimal(g, q, S)]
    result = _filter_dominated(g, q, result)
    assert len(result) <= 4 ** q.k, "important separator count exceeds 4^k"
    return sorted(result, key=lambda s: (len(s), sorted(s)))


def _furthest_min_cut(g, X, Y, alive, lam) -> frozenset[int]:
    """Minimum cut with inclusion-maximal X-side reachability."""
    from .graphs import min_vertex_cut_furthest

    value, cut = min_vertex_cut_furthest(g, X, Y, alive=alive)
    assert value == lam
    return frozenset(cut)


def _is_separator(g, q, S: frozenset[int]) -> bool:
    alive = set(range(g.n)) - set(S)
    reach = _reach(g, q.sources, set(), alive)
    return not (reach & q.sinks)


def _is_minimal(g, q, S: frozenset[int]) -> bool:
    for v in S:
        T = set(S) - {v}
        alive = set(range(g.n)) - T
        reach = _reach(g, q.sources, set(), alive)
        if not (reach & q.sinks):
            return False
    return True


def _filter_dominated(g, q, seps) -> list[frozenset[int]]:
    reaches = {}
    for S in seps:
        alive = set(range(g.n)) - set(S)
        reaches[S] = frozenset(_reach(g, q.sources, set(), alive))
    keep = []
    for S in seps:
        dominated = False
        for S2 in seps:
            if S2 is S:
                continue
            if len(S2) <= len(S) and reaches[S2] > reaches[S]:
                dominated = True
                break
        if dominated:
            continue
        keep.append(S)
    return keep


# ---------------------------------------------------------------------------
# branching solver
# ---------------------------------------------------------------------------


@dataclass
class ImpsepResult:
    opt: int | None
    solution: list[int] | None
    timed_out: bool = False


def _isolating_cut_value(g, t, others, alive) -> int:
    try:
        lam, _ = _min_cut(g, {t}, set(others), alive)
        return lam
    except UncuttableError:
        return 1 << 30


def solve_mwc_impsep(
    inst: MwcInstance,
    split_components: bool = True,
    timeout: float | None = None,
) -> ImpsepResult:
    """Exact multiway cut via important-separator branching.

    Runs the simple preprocessing, then ascends the budget; each decision
    run picks the terminal with the largest isolating min-cut and branches
    over all its important separators that fit the remaining budget.
    """
    deadline = None if timeout is None else time.monotonic() + timeout
    forced, red = mwc_simple_preprocess(inst)
    g = red.graph
    terms = [t for t in red.terminals]

    def tick():
        if deadline is not None and time.monotonic() > deadline:
            raise ImpsepTimeout

    def active_terminals(alive: set[int]) -> list[int]:
        comps = connected_components(g, alive)
        act = []
        for comp in comps:
            ts = [t for t in terms if t in comp]
            if len(ts) > 1:
                act.extend(ts)
        return act

    def greedy_upper(alive: set[int]) -> list[int] | None:
        """Isolating-cut solution inside the alive subgraph, or None."""
        removed: list[int] = []
        cur = set(alive)
        for t in terms:
            if t not in cur:
                continue
            others = [x for x in terms if x != t and x in cur]
            comp = _reach(g, [t], set(), cur)
            rest = [x for x in others if x in comp]
            if not rest:
                continue
            try:
                _, cut = _min_cut_set(g, {t}, set(rest), cur)
            except UncuttableError:
                return None
            removed.extend(cut)
            cur -= set(cut)
        return removed

    def decide(alive: set[int], k: int, chosen: list[int]) -> list[int] | None:
        tick()
        act = active_terminals(alive)
        if not act:
            return chosen
        if k <= 0:
            return None
        ub = greedy_upper(alive)
        if ub is not None and len(ub) <= k:
            return chosen + ub
        if split_components:
            comps = connected_components(g, alive)
            multi = [c for c in comps if len(set(c) & set(act)) > 1]
            if len(multi) > 1:
                # solve each component to optimality within the budget
                total: list[int] = list(chosen)
                left = k
                for comp in multi:
                    sub_alive = set(comp)
                    best = None
                    for kk in range(0, left + 1):
                        res = decide(sub_alive, kk, [])
                        if res is not None:
                            best = res
                            break
                    if best is None:
                        return None
                    total.extend(best)
                    left -= len(best)
                return total
        t = max(act, key=lambda x: (_isolating_cut_value(g, x, [y for y in act if y != x], alive), -x))
        others = {y for y in act if y != t}
        sub, order = g.induced(sorted(alive))
        back = {old: new for new, old in enumerate(order)}
        try:
            q = ImportantSeparatorQuery(
                sub,
                frozenset({back[t]}),
                frozenset(back[y] for y in others if y in back),
                k,
            )
            seps = enumerate_important_separators(q)
        except UncuttableError:
            return None
        for S in seps:
            tick()
            S_orig = [order[v] for v in S]
            res = decide(alive - set(S_orig), k - len(S), chosen + S_orig)
            if res is not None:
                return res
        return None

    alive0 = set(range(g.n))
    act0 = active_terminals(alive0)
    lb = 0
    for t in act0:
        lb = max(lb, _isolating_cut_value(g, t, [y for y in act0 if y != t], alive0))
    if lb >= 1 << 29:
        return ImpsepResult(None, None)
    if act0:
        # the packing relaxation usually dominates the single-cut bound
        from .frontends import mwc_to_csp
        from .relax import CoverEngine, pack_state

        state = mwc_to_csp(red).state
        cover = CoverEngine(state).min_cover()
        w2 = cover.weight2
        if not cover.exact:
            w2 = pack_state(state, target2=w2).size
        lb = max(lb, (w2 + 1) // 2)
    try:
        for k in range(lb, len(alive0) + 1):
            sol = decide(alive0, k, [])
            if sol is not None:
                full = sorted(set(sol) | set(forced))
                return ImpsepResult(len(full), full)
        return ImpsepResult(None, None)
    except ImpsepTimeout:
        return ImpsepResult(None, None, timed_out=True)
