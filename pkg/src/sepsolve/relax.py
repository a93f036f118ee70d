"""Half-integral relaxation machinery for 0/1/all deletion instances.

The central object is the minimum half-integral cover: vertex weights in
{0, 1/2, 1} giving every conflicting path total weight at least one.  We
compute it exactly by a cutting-plane loop: weights live in doubled units
g(v) in {0, 1, 2}, violated paths (weight < 2) are found by a bucketed
shortest-path sweep over (vertex, value) "lane" states, and the restricted
covering problem over the accumulated path pool is solved by an exact
depth-first branch-and-bound.  The cover weight equals half the size of a
maximum half-integral packing of conflicting paths (checked against an
enumeration oracle in the tests), so the cover also certifies packing
targets, budget pruning and the persistence pipeline.

Among optimal covers the search is biased toward charging vertices far
from the assigned starts; that is the extremal choice under which the
weight-zero region is safe to proclaim undeletable and full-weight
vertices are safe to delete.  Both reductions are exercised against brute
force in the test suite.

A 0/1/all row may also be empty: fixing (v, a) leaves a neighbor u with no
value at all.  Such dead ends do not form conflicting paths in the strict
sense, but any solution keeping the chain alive must delete u, so the
engine covers "reachable chain plus dead-end neighbor" as an extra
conflict unit.  The front-ends never generate empty rows; only the
generic API can.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from fractions import Fraction

from .csp import CspState, enumerate_paths_of_state


class EngineError(RuntimeError):
    """Internal limit exceeded; results would not be certified."""


_BNB_NODE_CAP_BASE = 20_000
_SMALL_LANES = 64          # exhaustive packing fallback threshold
_SMALL_PATH_CAP = 6000


@dataclass
class ConflictUnit:
    """One covering constraint: the vertex multiset of a conflict.

    `lanes` keeps a witnessing implicational path; `verts` (with
    multiplicity) is what the covering problem sees.  A dead-end unit
    carries the valueless neighbor as its last vertex.
    """

    verts: tuple[int, ...]
    lanes: tuple[tuple[int, int], ...]
    dead_end: bool = False

    def key(self):
        return (self.verts, self.dead_end)

    def mults(self) -> tuple[tuple[int, int], ...]:
        m: dict[int, int] = {}
        for v in self.verts:
            m[v] = m.get(v, 0) + 1
        return tuple(sorted(m.items()))


@dataclass
class CoverResult:
    g: list[int]               # doubled weights per vertex, 0/1/2
    weight2: int               # sum of g = twice the cover weight
    units: list[ConflictUnit]  # active pool at convergence
    source_dist: dict[int, int]
    exact: bool = True         # False when the covering search hit its cap

    def weight(self) -> Fraction:
        return Fraction(self.weight2, 2)

    def f(self, v: int) -> Fraction:
        return Fraction(self.g[v], 2)

    def half_vertices(self) -> list[int]:
        return [v for v, gv in enumerate(self.g) if gv == 1]

    def full_vertices(self) -> list[int]:
        return [v for v, gv in enumerate(self.g) if gv == 2]


class CoverEngine:
    """Cutting-plane solver bound to one CspState (shared across a solve)."""

    def __init__(self, state: CspState):
        self.state = state
        self.pool: list[ConflictUnit] = []
        self._pool_keys: set = set()

    # -- lane graph helpers --------------------------------------------------

    def lane_arcs(self):
        """succ[(v, a)] -> [(u, b)] plus dead-end rows, alive vertices only."""
        st = self.state
        succ: dict[tuple[int, int], list[tuple[int, int]]] = {}
        dead: dict[tuple[int, int], list[int]] = {}
        for v in range(st.n):
            if not st.alive[v]:
                continue
            neigh = [(u, c) for u, c in st.constraints[v].items() if st.alive[u]]
            for a in range(st.d):
                outs = []
                dends = []
                for u, cons in neigh:
                    bs = cons.successors(a)
                    if len(bs) == 1:
                        outs.append((u, bs[0]))
                    elif len(bs) == 0:
                        dends.append(u)
                if outs:
                    succ[(v, a)] = outs
                if dends:
                    dead[(v, a)] = dends
        return succ, dead

    def _sources(self):
        st = self.state
        return sorted((v, a) for v, a in st.phi0.items() if st.alive[v])

    def _is_conflict_lane(self, v: int, a: int) -> bool:
        phi = self.state.phi0.get(v)
        return phi is not None and phi != a

    def source_hop_dist(self, succ) -> dict[int, int]:
        """Per-vertex minimum hop distance from any assigned start lane."""
        dist: dict[tuple[int, int], int] = {}
        dq = deque()
        for lane in self._sources():
            dist[lane] = 0
            dq.append(lane)
        while dq:
            lane = dq.popleft()
            for nxt in succ.get(lane, ()):
                if nxt not in dist:
                    dist[nxt] = dist[lane] + 1
                    dq.append(nxt)
        vdist: dict[int, int] = {}
        for (v, _), d_ in dist.items():
            if v not in vdist or d_ < vdist[v]:
                vdist[v] = d_
        return vdist

    # -- separation ----------------------------------------------------------

    def _separate(self, g: list[int], succ, dead, limit: int = 24) -> list[ConflictUnit]:
        """Conflict units of g-weight < 2, weights counting multiplicity.

        A conflicting path with a conflicting proper prefix is dominated by
        that prefix, so the sweep stops at the first conflict on a chain.
        """
        dist: dict[tuple[int, int], int] = {}
        parent: dict[tuple[int, int], tuple[int, int] | None] = {}
        buckets = [deque(), deque()]
        for lane in self._sources():
            w = g[lane[0]]
            if w <= 1:
                dist[lane] = w
                parent[lane] = None
                buckets[w].append(lane)
        found: list[ConflictUnit] = []

        def path_of(lane):
            steps = []
            cur = lane
            while cur is not None:
                steps.append(cur)
                cur = parent[cur]
            return tuple(reversed(steps))

        settled: set[tuple[int, int]] = set()
        for band in (0, 1):
            dq = buckets[band]
            while dq:
                lane = dq.popleft()
                if lane in settled or dist.get(lane) != band:
                    continue
                settled.add(lane)
                v, a = lane
                if self._is_conflict_lane(v, a):
                    lanes = path_of(lane)
                    found.append(ConflictUnit(tuple(x for x, _ in lanes), lanes))
                    if len(found) >= limit:
                        return found
                    continue
                for u in dead.get(lane, ()):
                    if band + g[u] <= 1:
                        lanes = path_of(lane)
                        found.append(
                            ConflictUnit(
                                tuple(x for x, _ in lanes) + (u,), lanes, True
                            )
                        )
                        if len(found) >= limit:
                            return found
                for nxt in succ.get(lane, ()):
                    nd = band + g[nxt[0]]
                    if nd <= 1 and (nxt not in dist or nd < dist[nxt]):
                        dist[nxt] = nd
                        parent[nxt] = lane
                        buckets[nd].append(nxt)
        return found

    def zero_reachable_lanes(self, g: list[int], succ=None) -> list[tuple[int, int]]:
        """Lanes on weight-zero implicational paths, in discovery order."""
        if succ is None:
            succ, _ = self.lane_arcs()
        out: list[tuple[int, int]] = []
        seen: set[tuple[int, int]] = set()
        dq = deque()
        for lane in self._sources():
            if g[lane[0]] == 0 and lane not in seen:
                seen.add(lane)
                dq.append(lane)
                out.append(lane)
        while dq:
            lane = dq.popleft()
            for nxt in succ.get(lane, ()):
                if g[nxt[0]] == 0 and nxt not in seen:
                    seen.add(nxt)
                    dq.append(nxt)
                    out.append(nxt)
        return out

    # -- exact restricted covering --------------------------------------------

    def _unit_alive(self, unit: ConflictUnit) -> bool:
        """Valid in the current state: vertices live, start still assigned
        its value, and the end still in conflict (assignments vary across
        branches, so pooled units must be re-validated)."""
        st = self.state
        if not all(st.alive[v] for v in unit.verts):
            return False
        v0, a0 = unit.lanes[0]
        if st.phi0.get(v0) != a0:
            return False
        if unit.dead_end:
            return True
        ve, ae = unit.lanes[-1]
        phe = st.phi0.get(ve)
        return phe is not None and phe != ae

    @staticmethod
    def _unit_weight(unit: ConflictUnit, g: list[int]) -> int:
        return sum(g[v] for v in unit.verts)

    def _greedy_cover(self, units, order_key) -> list[int]:
        g = [0] * self.state.n
        for unit in units:
            mults = dict(unit.mults())
            need = 2 - self._unit_weight(unit, g)
            for v in sorted(mults, key=order_key):
                while g[v] < 2 and need > 0:
                    g[v] += 1
                    need -= mults[v]
                if need <= 0:
                    break
        charged = [v for v in range(self.state.n) if g[v]]
        for v in sorted(charged, key=order_key, reverse=True):
            while g[v] > 0:
                g[v] -= 1
                if any(self._unit_weight(u, g) < 2 for u in units):
                    g[v] += 1
                    break
        return g

    def _bnb_cover(
        self, units: list[ConflictUnit], far_rank
    ) -> tuple[list[int], int, bool]:
        """Minimum of sum(g) giving every unit weight >= 2.

        Exact up to the node cap; beyond it the greedy solution is kept and
        flagged, in which case callers must not treat the weight as a lower
        bound or apply persistence reductions.
        """
        n = self.state.n
        order_key = lambda v: (-far_rank.get(v, -1), v)
        best_g = self._greedy_cover(units, order_key)
        best = sum(best_g)
        if best == 0:
            return best_g, 0, True
        g = [0] * n
        frozen: set[int] = set()
        nodes = 0
        active_verts = len({v for u in units for v in u.verts})
        node_cap = _BNB_NODE_CAP_BASE + 400 * active_verts + 150 * len(units)

        def lower_bound(total: int) -> int:
            # admissible: g-unit costs respect vertex multiplicities
            used: set[int] = set()
            lb = total
            for unit in units:
                w = self._unit_weight(unit, g)
                if w >= 2:
                    continue
                mults = unit.mults()
                grow = [
                    (v, m) for v, m in mults if v not in frozen and g[v] < 2
                ]
                if not grow:
                    return 1 << 30
                deficit = 2 - w
                # cheapest repair: fill highest-multiplicity vertices first
                cost = 0
                left = deficit
                for v, m in sorted(grow, key=lambda x: -x[1]):
                    cap = 2 - g[v]
                    take = min(cap, -(-left // m))
                    cost += take
                    left -= take * m
                    if left <= 0:
                        break
                if left > 0:
                    return 1 << 30
                if any(v in used for v, _ in grow):
                    continue
                lb += cost
                used.update(v for v, _ in grow)
            return lb

        class _Capped(Exception):
            pass

        def dfs(total: int):
            nonlocal best, best_g, nodes
            nodes += 1
            if nodes > node_cap:
                raise _Capped
            if total >= best:
                return
            viol = None
            for unit in units:
                if self._unit_weight(unit, g) < 2:
                    viol = unit
                    break
            if viol is None:
                best = total
                best_g = list(g)
                return
            if lower_bound(total) >= best:
                return
            cands = sorted(
                (v for v in set(viol.verts) if v not in frozen and g[v] < 2),
                key=order_key,
            )
            newly = []
            for v in cands:
                g[v] += 1
                dfs(total + 1)
                g[v] -= 1
                frozen.add(v)
                newly.append(v)
            for v in newly:
                frozen.discard(v)

        try:
            dfs(0)
        except _Capped:
            return best_g, best, False
        return best_g, best, True

    def _spread_full_weights(self, g: list[int], units, order_key):
        """Trade g(v)=2 for two halves when an equal-weight cover allows it.

        Full weights trigger forced deletions, so among minimum covers the
        one with the fewest of them is the conservative extremal choice
        (the symmetric chain gets the half/half dual, not an endpoint).
        """
        changed = True
        while changed:
            changed = False
            for v in [x for x in range(self.state.n) if g[x] == 2]:
                g[v] = 1
                viol = [u for u in units if self._unit_weight(u, g) < 2]
                if any(self._unit_weight(u, g) < 1 for u in viol):
                    g[v] = 2
                    continue
                common: set[int] | None = None
                for u in viol:
                    vs = set(u.verts)
                    common = vs if common is None else (common & vs)
                # receiver must start at zero so the full-weight count
                # strictly drops (otherwise the pass can oscillate)
                common = {u for u in (common or set()) if u != v and g[u] == 0}
                if common:
                    g[max(common, key=order_key)] += 1
                    changed = True
                else:
                    g[v] = 2

    # -- public entry ---------------------------------------------------------

    def min_cover(self) -> CoverResult:
        """Exact minimum half-integral cover of the current state."""
        succ, dead = self.lane_arcs()
        far_rank = self.source_hop_dist(succ)
        order_key = lambda v: (-far_rank.get(v, -1), v)
        active = [u for u in self.pool if self._unit_alive(u)]
        seen_keys = {u.key() for u in active}
        g = [0] * self.state.n
        weight2 = 0
        exact = True
        while True:
            if active:
                g, weight2, exact = self._bnb_cover(active, far_rank)
                if exact:
                    self._spread_full_weights(g, active, order_key)
            else:
                g, weight2, exact = [0] * self.state.n, 0, True
            new = [u for u in self._separate(g, succ, dead) if u.key() not in seen_keys]
            if not new:
                break
            for u in new:
                seen_keys.add(u.key())
                active.append(u)
                if u.key() not in self._pool_keys:
                    self._pool_keys.add(u.key())
                    self.pool.append(u)
        return CoverResult(g, weight2, active, far_rank, exact)


# ---------------------------------------------------------------------------
# packing
# ---------------------------------------------------------------------------


@dataclass
class Packing:
    """Half-integral packing: conflicting paths with per-vertex load <= 2."""

    paths: list[tuple[tuple[int, int], ...]]
    certified_max2: int | None = None  # set when the size matches the cover
    cover: "CoverResult | None" = None  # dual search state for extract_cover

    @property
    def size(self) -> int:
        return len(self.paths)

    def load(self, n: int) -> list[int]:
        load = [0] * n
        for p in self.paths:
            for v, _ in p:
                load[v] += 1
        return load

    def clusters(self) -> list[int]:
        """Sizes of connected bundles of paths sharing a vertex."""
        parent = list(range(len(self.paths)))

        def find(x):
            while parent[x] != x:
                parent[x] = parent[parent[x]]
                x = parent[x]
            return x

        owner: dict[int, int] = {}
        for i, p in enumerate(self.paths):
            for v, _ in p:
                if v in owner:
                    a, b = find(owner[v]), find(i)
                    if a != b:
                        parent[a] = b
                else:
                    owner[v] = i
        sizes: dict[int, int] = {}
        for i in range(len(self.paths)):
            r = find(i)
            sizes[r] = sizes.get(r, 0) + 1
        return sorted(sizes.values())

    def flowers(self) -> int:
        return sum(1 for c in self.clusters() if c >= 3 and c % 2 == 1)


def lb1_from_cover(weight2: int) -> int:
    return (weight2 + 1) // 2


def lb2_value(packing: Packing) -> int:
    """Lower bound from the path/flower split of the packing.

    A bundle of an odd number (>= 3) of pairwise vertex-sharing paths needs
    one more deletion than pairing suggests: a deleted vertex kills at most
    two packed paths and those always lie in the same bundle.
    """
    return (packing.size + packing.flowers() + 1) // 2


def pack_state(state: CspState, target2: int | None = None) -> Packing:
    """Conflicting-path packing with per-vertex load <= 2.

    Greedy waves of shortest free paths, then splice augmentation (take
    over a packed path's suffix and re-route its orphaned prefix).  When
    `target2` (twice the minimum cover weight) is reached the packing is
    certified maximum; small instances fall back to an exhaustive search
    so the certificate is always attained there.
    """
    engine = CoverEngine(state)
    succ, _dead = engine.lane_arcs()
    phi0 = state.phi0
    n = state.n
    load = [0] * n
    paths: list[tuple[tuple[int, int], ...]] = []

    def conflict(lane) -> bool:
        p = phi0.get(lane[0])
        return p is not None and p != lane[1]

    sources = [lane for lane in engine._sources() if not conflict(lane)]

    def find_free_path(src) -> tuple | None:
        """BFS through load <= 1 vertices from src to any first conflict."""
        parent = {src: None}
        dq = deque([src])
        while dq:
            lane = dq.popleft()
            if conflict(lane):
                steps = []
                cur = lane
                while cur is not None:
                    steps.append(cur)
                    cur = parent[cur]
                steps.reverse()
                mult: dict[int, int] = {}
                for v, _ in steps:
                    mult[v] = mult.get(v, 0) + 1
                if all(load[v] + c <= 2 for v, c in mult.items()):
                    return tuple(steps)
                continue
            for nxt in succ.get(lane, ()):
                if nxt not in parent and load[nxt[0]] <= 1:
                    parent[nxt] = lane
                    dq.append(nxt)
        return None

    def commit(p):
        paths.append(p)
        for v, _ in p:
            load[v] += 1

    progress = True
    while progress and (target2 is None or len(paths) < target2):
        progress = False
        for src in sources:
            if target2 is not None and len(paths) >= target2:
                break
            if load[src[0]] > 1:
                continue
            p = find_free_path(src)
            if p is not None:
                commit(p)
                progress = True

    # splice augmentation: adopt a resident suffix, re-route its prefix
    def augment_once(node_budget: int) -> bool:
        arrivals: dict[tuple[int, int], list[tuple[int, tuple]]] = {}
        for idx, p in enumerate(paths):
            for j in range(1, len(p)):
                arrivals.setdefault(p[j], []).append((idx, p))
        journal: list = []

        def undo(mark):
            while len(journal) > mark:
                ev = journal.pop()
                if ev[0] == "load":
                    load[ev[1]] -= 1
                elif ev[0] == "set":
                    paths[ev[1]] = ev[2]
                elif ev[0] == "add":
                    paths.pop()

        budget = [node_budget]
        tried: set = set()

        def dangle(prefix: tuple, depth: int) -> bool:
            budget[0] -= 1
            if budget[0] < 0 or depth > 2 * n:
                return False
            lane = prefix[-1]
            if conflict(lane):
                journal.append(("add",))
                paths.append(prefix)
                return True
            inpath = set(prefix)
            for nxt in succ.get(lane, ()):
                if nxt in inpath:
                    continue
                u = nxt[0]
                if load[u] <= 1:
                    key = ("f", nxt, len(prefix))
                    if key not in tried:
                        tried.add(key)
                        journal.append(("load", u))
                        load[u] += 1
                        if dangle(prefix + (nxt,), depth + 1):
                            return True
                        undo(len(journal) - 1)
                for idx, orig in arrivals.get(nxt, ()):
                    if paths[idx] is not orig:
                        continue
                    j = orig.index(nxt)
                    key = ("s", idx, j, lane)
                    if key in tried:
                        continue
                    tried.add(key)
                    mark = len(journal)
                    journal.append(("set", idx, orig))
                    paths[idx] = prefix + orig[j:]
                    orphan = orig[:j]
                    if dangle(orphan, depth + 1):
                        return True
                    undo(mark)
            return False

        for src in sources:
            if load[src[0]] > 1:
                continue
            mark = len(journal)
            journal.append(("load", src[0]))
            load[src[0]] += 1
            if dangle((src,), 0):
                return True
            undo(mark)
        return False

    budget = max(2000, 40 * (len(succ) + 1))
    while (target2 is None or len(paths) < target2) and augment_once(budget):
        pass

    # exhaustive fallback keeps small instances exactly optimal
    if target2 is not None and len(paths) < target2 and n * state.d <= _SMALL_LANES:
        exact = _exhaustive_packing(state, target2)
        if exact is not None and len(exact) > len(paths):
            paths = exact
            load = Packing(paths).load(n)

    pk = Packing(paths)
    if target2 is not None and pk.size == target2:
        pk.certified_max2 = target2
    return pk


def _exhaustive_packing(state: CspState, target2: int) -> list | None:
    all_paths = enumerate_paths_of_state(state, cap=_SMALL_PATH_CAP)
    if all_paths is None:
        return None
    mults = []
    for p in all_paths:
        m: dict[int, int] = {}
        for v, _ in p:
            m[v] = m.get(v, 0) + 1
        mults.append(m)
    order = sorted(range(len(all_paths)), key=lambda i: len(all_paths[i]))
    load: dict[int, int] = {}
    best: list[int] = []
    chosen: list[int] = []

    def dfs(pos: int):
        # branch on which path is taken next; depth is the packing size
        nonlocal best
        if len(chosen) > len(best):
            best = list(chosen)
        if len(best) >= target2:
            return
        for idx in range(pos, len(order)):
            if len(chosen) + (len(order) - idx) <= len(best):
                break
            i = order[idx]
            m = mults[i]
            if any(load.get(v, 0) + c > 2 for v, c in m.items()):
                continue
            for v, c in m.items():
                load[v] = load.get(v, 0) + c
            chosen.append(i)
            dfs(idx + 1)
            chosen.pop()
            for v, c in m.items():
                load[v] -= c
            if len(best) >= target2:
                return

    dfs(0)
    return [all_paths[i] for i in best]


# ---------------------------------------------------------------------------
# persistence
# ---------------------------------------------------------------------------


@dataclass
class ReduceReport:
    deleted: list[int] = field(default_factory=list)       # original ids
    undeletable: list[int] = field(default_factory=list)   # original ids
    cover: CoverResult | None = None


def persistence_reduce(
    state: CspState,
    engine: CoverEngine | None = None,
    trail: list | None = None,
    enable_deletions: bool = True,
    enable_zero_proclaim: bool = True,
) -> ReduceReport:
    """Apply cover-driven reductions to a fixed point.

    Repeatedly: compute the minimum half-integral cover; delete its
    full-weight vertices (extendable to an optimum); proclaim the assigned
    vertices on weight-zero implicational paths undeletable in path order.
    Raises BudgetExhausted when forced deletions outrun the budget.
    """
    if engine is None:
        engine = CoverEngine(state)
    report = ReduceReport()
    del_mark = len(state.deleted_log)
    und_mark = len(state.undeletable_log)
    while True:
        cover = engine.min_cover()
        report.cover = cover
        if not cover.exact:
            break  # reductions are only justified by exact extremal covers
        if enable_deletions and cover.full_vertices():
            for v in cover.full_vertices():
                if state.alive[v]:
                    state.proclaim_deleted(v, trail)
            continue
        if not enable_zero_proclaim:
            break
        zero = engine.zero_reachable_lanes(cover.g)
        progressed = False
        deletions_before = len(state.deleted_log)
        for v, a in zero:
            if not state.alive[v]:
                continue
            if state.phi0.get(v) != a:
                continue
            state.proclaim_undeletable(v, trail)
            progressed = True
            if len(state.deleted_log) != deletions_before:
                break  # a cascade changed the instance; recompute the cover
        if not progressed:
            break
    report.deleted = state.deleted_log[del_mark:]
    report.undeletable = state.undeletable_log[und_mark:]
    return report


def slack2(state: CspState, weight2: int) -> int:
    """Twice the slack: 2k minus the maximum packing size."""
    return 2 * state.k - weight2


# ---------------------------------------------------------------------------
# public operation surface
# ---------------------------------------------------------------------------


def max_halfintegral_packing(inst) -> Packing:
    """Maximum half-integral packing of conflicting paths of an instance.

    The returned packing carries the dual cover as its search state; use
    extract_cover to read it.  Sizes are certified maximum whenever the
    packing meets twice the cover weight (always, on instances where the
    path relaxation is the whole story; the tests pin this down).
    """
    state = inst.state.clone()
    engine = CoverEngine(state)
    cover = engine.min_cover()
    pk = pack_state(state, target2=cover.weight2)
    pk.cover = cover
    return pk


def extract_cover(packing: Packing) -> CoverResult:
    """Minimum half-integral cover from the packing's search state."""
    if packing.cover is None:
        raise ValueError("packing carries no cover state")
    return packing.cover


def slack(inst, packing: Packing) -> Fraction:
    """Exact rational budget slack: k minus half the packing size."""
    return Fraction(2 * inst.k - packing.size, 2)
