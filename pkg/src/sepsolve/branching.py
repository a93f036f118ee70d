"""Branching solver for 0/1/all deletion instances.

Variants: plain branching, branching with slack pruning (lb1), and
branching with the additional path/flower bound (lb2); each optionally
splits the instance into connected components and solves them
independently.  One solve call runs single-threaded over a mutable state
with an undo trail; distinct calls share nothing.
"""

from __future__ import annotations

import time
from collections import deque
from dataclasses import dataclass, field

from .csp import BudgetExhausted, CspInstance, CspState, ForbiddenDeletion
from .relax import (
    CoverEngine,
    lb1_from_cover,
    lb2_value,
    pack_state,
    persistence_reduce,
)

LB_NONE = "none"
LB1 = "lb1"
LB2 = "lb2"


class SolveTimeout(Exception):
    pass


@dataclass(frozen=True)
class SolverVariant:
    lower_bound: str = LB2          # "none" | "lb1" | "lb2"
    split_components: bool = False

    def __post_init__(self):
        if self.lower_bound not in (LB_NONE, LB1, LB2):
            raise ValueError(f"unknown lower bound {self.lower_bound!r}")

    @property
    def label(self) -> str:
        base = {LB_NONE: "csp", LB1: "csp_lb1", LB2: "csp_lb2"}[self.lower_bound]
        return base + ("_cc" if self.split_components else "")


@dataclass
class SolveStats:
    nodes: int = 0
    max_depth: int = 0
    root_lb1: int | None = None
    root_lb2: int | None = None
    root_packing: int | None = None
    root_packing_certified: bool = False
    slack_monotone_violations: int = 0
    slack_progress_violations: int = 0

    def absorb(self, other: "SolveStats"):
        self.nodes += other.nodes
        self.max_depth = max(self.max_depth, other.max_depth)
        self.slack_monotone_violations += other.slack_monotone_violations
        self.slack_progress_violations += other.slack_progress_violations


@dataclass
class SolveResult:
    feasible: bool
    solution: list[int] | None
    stats: SolveStats
    timed_out: bool = False


@dataclass
class OptimumResult:
    opt: int | None
    solution: list[int] | None
    stats: SolveStats
    timed_out: bool = False


def _live_degree(state: CspState, v: int) -> int:
    return sum(1 for u in state.constraints[v] if state.alive[u])


def _components(state: CspState) -> list[list[int]]:
    seen: set[int] = set()
    comps: list[list[int]] = []
    for s in range(state.n):
        if not state.alive[s] or s in seen:
            continue
        comp = [s]
        seen.add(s)
        dq = deque([s])
        while dq:
            u = dq.popleft()
            for w in state.constraints[u]:
                if state.alive[w] and w not in seen:
                    seen.add(w)
                    comp.append(w)
                    dq.append(w)
        comps.append(sorted(comp))
    return comps


def _sub_instance(state: CspState, comp: list[int], k: int) -> CspInstance:
    back = {old: new for new, old in enumerate(comp)}
    cons = []
    for u in comp:
        for v, c in state.constraints[u].items():
            if v in back and u < v:
                cons.append((back[u], back[v], c))
    phi0 = {back[v]: a for v, a in state.phi0.items() if v in back}
    return CspInstance.build(
        state.d,
        len(comp),
        cons,
        phi0,
        k,
        orig_ids=[state.orig_ids[v] for v in comp],
        value_symmetric=state.value_symmetric,
    )


class _Search:
    def __init__(self, state: CspState, variant: SolverVariant, stats: SolveStats,
                 deadline: float | None):
        self.state = state
        self.variant = variant
        self.stats = stats
        self.deadline = deadline
        self.engine = CoverEngine(state)
        self.solution: list[int] | None = None
        # with caller-forbidden vertices the persistence reductions are not
        # justified (they quote unrestricted optima); fall back to pure branching
        self.safe_mode = bool(state.forbidden)

    def run(self) -> bool:
        return self._node(0, None)

    def _tick(self):
        if self.deadline is not None and time.monotonic() > self.deadline:
            raise SolveTimeout

    def _record(self, extra=()):
        self.solution = list(self.state.deleted_log) + [
            self.state.orig_ids[v] for v in extra
        ]

    def _node(self, depth: int, parent_slack2: int | None) -> bool:
        self._tick()
        self.stats.nodes += 1
        self.stats.max_depth = max(self.stats.max_depth, depth)
        st = self.state
        trail: list = []
        try:
            report = persistence_reduce(
                st,
                self.engine,
                trail,
                enable_deletions=not self.safe_mode,
                enable_zero_proclaim=not self.safe_mode,
            )
        except (BudgetExhausted, ForbiddenDeletion):
            st.undo(trail, 0)
            return False
        w2 = report.cover.weight2
        if not report.cover.exact:
            # the covering search hit its cap: the weight is only an upper
            # bound, so certify the lower bound from a packing instead
            pk = pack_state(st, target2=w2)
            w2 = pk.size
            if w2 == 0 and report.cover.units:
                w2 = 1  # dead-end conflicts exist even if nothing packs
        if parent_slack2 is not None:
            my_slack2 = 2 * st.k - w2
            if my_slack2 > parent_slack2:
                self.stats.slack_monotone_violations += 1
            if w2 > 0 and my_slack2 > parent_slack2 - 1:
                self.stats.slack_progress_violations += 1
        live = st.live_vertices()
        if not live:
            self._record()
            st.undo(trail, 0)
            return True
        if st.k >= len(live) and not any(v in st.forbidden for v in live):
            self._record(extra=live)
            st.undo(trail, 0)
            return True
        if w2 == 0:
            # assigned components are conflict-free, hence satisfiable as
            # they stand; only assignment-free components still need a seed
            seedable = [
                v
                for comp in _components(st)
                if not any(u in st.phi0 for u in comp)
                for v in comp
            ]
            if not seedable:
                self._record()
                st.undo(trail, 0)
                return True
            ok = self._seed_branch(depth, trail, seedable)
            st.undo(trail, 0)
            return ok
        # lower-bound pruning
        if self.variant.lower_bound in (LB1, LB2):
            if 2 * st.k - w2 < 0:
                st.undo(trail, 0)
                return False
            if self.variant.lower_bound == LB2:
                pk = pack_state(st, target2=w2)
                bound = max(lb1_from_cover(w2), lb2_value(pk))
                if bound > st.k:
                    st.undo(trail, 0)
                    return False
        v = self._branch_vertex(report.cover)
        my_slack2 = 2 * st.k - w2
        # delete v first: drives the budget down so pruning bites early
        if st.k >= 1 and v not in st.forbidden:
            mark = len(trail)
            st.proclaim_deleted(v, trail)
            if self._node(depth + 1, my_slack2):
                st.undo(trail, 0)
                return True
            st.undo(trail, mark)
        mark = len(trail)
        try:
            st.proclaim_undeletable(v, trail)
            if self._node(depth + 1, my_slack2):
                st.undo(trail, 0)
                return True
        except (BudgetExhausted, ForbiddenDeletion):
            pass
        st.undo(trail, 0)
        return False

    def _branch_vertex(self, cover) -> int:
        st = self.state
        cands = [
            v
            for v in cover.half_vertices()
            if st.alive[v] and v in st.phi0
        ]
        if not cands:
            # conservative fallback: branch on an assigned conflict start
            cands = sorted(
                {
                    u.lanes[0][0]
                    for u in cover.units
                    if st.alive[u.lanes[0][0]] and u.lanes[0][0] in st.phi0
                }
            )
        return max(cands, key=lambda v: (_live_degree(st, v), -st.orig_ids[v]))

    def _seed_branch(self, depth: int, trail: list, seedable: list[int]) -> bool:
        """Branch on the values of one vertex of an assignment-free component."""
        st = self.state
        v = max(seedable, key=lambda x: (_live_degree(st, x), -st.orig_ids[x]))
        values = range(1 if st.value_symmetric else st.d)
        my_slack2 = 2 * st.k
        for a in values:
            mark = len(trail)
            st._assign(v, a, trail)
            if self._node(depth + 1, my_slack2):
                st.undo(trail, mark)
                return True
            st.undo(trail, mark)
        return False


def solve_decision(
    inst: CspInstance,
    variant: SolverVariant = SolverVariant(),
    timeout: float | None = None,
) -> SolveResult:
    """Is there a deletion set of size <= k extending phi0 to a satisfying
    assignment of the rest?  Returns a witness in original vertex ids."""
    deadline = None if timeout is None else time.monotonic() + timeout
    stats = SolveStats()
    try:
        if variant.split_components:
            opt = _optimum_cc(inst, variant, stats, deadline)
            if opt.opt is None:
                return SolveResult(False, None, stats, timed_out=True)
            ok = opt.opt <= inst.k
            return SolveResult(ok, opt.solution if ok else None, stats)
        search = _Search(inst.state.clone(), variant, stats, deadline)
        ok = search.run()
        return SolveResult(ok, search.solution if ok else None, stats)
    except SolveTimeout:
        return SolveResult(False, None, stats, timed_out=True)


def preprocess(inst: CspInstance) -> tuple[list[int], list[int], CspInstance]:
    """Reductions applied up to just before the first branching step.

    Budget-independent: deletions found here belong to some optimal
    solution, so OPT(inst) = |deleted| + OPT(result).  The result keeps
    whatever budget remains (clamped at zero).
    """
    state = inst.state.clone()
    state.k = state.n + 1  # reductions here are unconditional
    report = persistence_reduce(state, CoverEngine(state))
    comp = [v for v in range(state.n) if state.alive[v]]
    k_left = max(inst.k - len(report.deleted), 0)
    reduced = _sub_instance(state, comp, k_left)
    return list(report.deleted), list(report.undeletable), reduced


def root_bounds(inst: CspInstance) -> tuple[int, int, int, bool]:
    """(lb1, lb2, packing size, certified) on the instance as given."""
    state = inst.state.clone()
    cover = CoverEngine(state).min_cover()
    pk = pack_state(state, target2=cover.weight2)
    lb1 = lb1_from_cover(cover.weight2)
    lb2 = max(lb1, lb2_value(pk))
    return lb1, lb2, pk.size, pk.certified_max2 is not None


def _with_budget(inst: CspInstance, k: int) -> CspInstance:
    s = inst.state.clone()
    s.k = k
    return CspInstance(s)


def with_forbidden(inst: CspInstance, forbidden_orig_ids) -> CspInstance:
    """Instance whose listed vertices (original ids) may never be deleted.

    The solver then runs in pure-branching mode: cover lower bounds stay
    valid, but persistence reductions are disabled because they quote
    unrestricted optima.
    """
    s = inst.state.clone()
    want = set(forbidden_orig_ids)
    s.forbidden = frozenset(
        i for i, oid in enumerate(s.orig_ids) if oid in want
    )
    return CspInstance(s)


def solve_optimum(
    inst: CspInstance,
    variant: SolverVariant = SolverVariant(),
    timeout: float | None = None,
    upper_hint: int | None = None,
) -> OptimumResult:
    """Minimum deletion-set size with witness.

    Ascends from the root lower bound: the first feasible budget is
    optimal, so no best-so-far bookkeeping is needed.
    """
    deadline = None if timeout is None else time.monotonic() + timeout
    stats = SolveStats()
    try:
        state = inst.state.clone()
        cover = CoverEngine(state).min_cover()
        pk = pack_state(state, target2=cover.weight2)
        stats.root_lb1 = lb1_from_cover(cover.weight2)
        stats.root_lb2 = max(stats.root_lb1, lb2_value(pk))
        stats.root_packing = pk.size
        stats.root_packing_certified = pk.certified_max2 is not None
        if variant.split_components:
            res = _optimum_cc(inst, variant, stats, deadline)
            res.stats = stats
            return res
        lb = stats.root_lb1 if variant.lower_bound == LB_NONE else (
            stats.root_lb2 if variant.lower_bound == LB2 else stats.root_lb1
        )
        ub = inst.num_live() if upper_hint is None else min(upper_hint, inst.num_live())
        for k in range(lb, ub + 1):
            sub = _with_budget(inst, k)
            search = _Search(sub.state, variant, stats, deadline)
            if search.run():
                return OptimumResult(len(search.solution), search.solution, stats)
        return OptimumResult(None, None, stats)  # infeasible under constraints
    except SolveTimeout:
        return OptimumResult(None, None, stats, timed_out=True)


def _optimum_cc(
    inst: CspInstance,
    variant: SolverVariant,
    stats: SolveStats,
    deadline: float | None,
) -> OptimumResult:
    """Root preprocessing, then solve each component independently."""
    state = inst.state.clone()
    state.k = state.n + 1
    report = persistence_reduce(state, CoverEngine(state))
    solution = list(report.deleted)
    inner = SolverVariant(variant.lower_bound, False)
    for comp in _components(state):
        sub = _sub_instance(state, comp, 0)
        left = (
            None
            if deadline is None
            else max(deadline - time.monotonic(), 0.001)
        )
        res = solve_optimum(sub, inner, timeout=left)
        stats.absorb(res.stats)
        if res.timed_out or res.opt is None:
            return OptimumResult(None, None, stats, timed_out=True)
        solution.extend(res.solution)
    return OptimumResult(len(solution), solution, stats)


def solve_with_components(
    inst: CspInstance,
    variant: SolverVariant,
    timeout: float | None = None,
) -> SolveResult:
    """Decision wrapper that sums per-component optima."""
    v = SolverVariant(variant.lower_bound, True)
    return solve_decision(inst, v, timeout)
