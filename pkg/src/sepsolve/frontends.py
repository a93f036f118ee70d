"""Reductions from the two concrete problems to 0/1/all deletion instances.

Odd cycle transversal: domain {0, 1}, every edge a not-equal constraint,
empty initial assignment.  Multiway cut: after the simple preprocessing
(reject terminal-terminal edges, delete vertices adjacent to two or more
terminals), domain = terminals, graph = G - T, equality constraints, and
every terminal neighbor pinned to its terminal's value.  Deletion sets
correspond bijectively in both directions, so solutions lift back by the
identity on original vertex ids plus the forced deletions.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field

from .csp import Constraint, CspInstance
from .graphs import (
    Graph,
    InfeasibleInstanceError,
    MwcInstance,
    OctInstance,
    connected_components,
)


def oct_to_csp(inst: OctInstance) -> CspInstance:
    g = inst.graph
    ne = Constraint.not_equal()
    cons = [(u, v, ne) for u, v in sorted(g.edges)]
    k = inst.budget if inst.budget is not None else g.n
    return CspInstance.build(2, g.n, cons, {}, k, value_symmetric=True)


def is_bipartite_after(g: Graph, deleted) -> bool:
    """BFS 2-coloring of G minus the deleted set."""
    deleted = set(deleted)
    color: dict[int, int] = {}
    for s in range(g.n):
        if s in deleted or s in color:
            continue
        color[s] = 0
        dq = deque([s])
        while dq:
            u = dq.popleft()
            for w in g.adj[u]:
                if w in deleted:
                    continue
                if w not in color:
                    color[w] = 1 - color[u]
                    dq.append(w)
                elif color[w] == color[u]:
                    return False
    return True


def mwc_simple_preprocess(inst: MwcInstance) -> tuple[set[int], MwcInstance]:
    """Reject terminal-terminal edges; delete neighbors of two terminals.

    One pass suffices: deleting vertices cannot create new terminal
    adjacencies.  The forced deletions are returned in original ids.
    """
    g = inst.graph
    tset = set(inst.terminals)
    for u, v in g.edges:
        if u in tset and v in tset:
            raise InfeasibleInstanceError(f"terminal-terminal edge ({u},{v})")
    forced: set[int] = set()
    for v in range(g.n):
        if v in tset:
            continue
        if sum(1 for w in g.adj[v] if w in tset) >= 2:
            forced.add(v)
    k = inst.budget
    if k is not None:
        k -= len(forced)
        if k < 0:
            raise InfeasibleInstanceError("forced deletions exceed the budget")
    reduced = MwcInstance(g.remove_vertices(forced), inst.terminals, k)
    return forced, reduced


def mwc_to_csp(inst: MwcInstance) -> CspInstance:
    """Equality-constraint instance on G - T; apply the simple preprocessing
    first so that every remaining vertex sees at most one terminal."""
    g = inst.graph
    terms = list(inst.terminals)
    tset = set(terms)
    tindex = {t: i for i, t in enumerate(terms)}
    keep = [v for v in range(g.n) if v not in tset]
    back = {old: new for new, old in enumerate(keep)}
    d = max(len(terms), 1)
    eq = Constraint.equality(d)
    cons = [
        (back[u], back[v], eq)
        for u, v in sorted(g.edges)
        if u in back and v in back
    ]
    phi0: dict[int, int] = {}
    for t in terms:
        for w in g.adj[t]:
            if w in tset:
                raise InfeasibleInstanceError("terminal-terminal edge")
            prev = phi0.get(back[w])
            if prev is not None and prev != tindex[t]:
                raise ValueError(
                    "vertex adjacent to two terminals; run mwc_simple_preprocess first"
                )
            phi0[back[w]] = tindex[t]
    k = inst.budget if inst.budget is not None else len(keep)
    return CspInstance.build(
        d, len(keep), cons, phi0, k, orig_ids=keep, value_symmetric=True
    )


def lift_solution(forced, csp_solution) -> list[int]:
    """Original-id deletion set: forced deletions plus the CSP's witness.

    CSP instances carry original ids, so the witness needs no remapping.
    """
    return sorted(set(forced) | set(csp_solution))


@dataclass
class MwcPreprocessReport:
    """Statistics of the full preprocessing pipeline on one instance."""

    forced: set[int] = field(default_factory=set)
    deleted: list[int] = field(default_factory=list)
    undeletable: list[int] = field(default_factory=list)
    resolved_terminals: int = 0
    left_terminals: int = 0
    left_degree: int = 0          # assigned vertices remaining (|N(T)|)
    reduced: CspInstance | None = None

    @property
    def pre_del(self) -> int:
        return len(self.forced) + len(self.deleted)


def mwc_preprocess_full(inst: MwcInstance) -> MwcPreprocessReport:
    """Simple preprocessing plus the solver's reductions, with the counts
    reported by the experiment harness."""
    from .branching import preprocess  # local import to avoid a cycle

    report = MwcPreprocessReport()
    forced, reduced_mwc = mwc_simple_preprocess(inst)
    report.forced = forced
    csp = mwc_to_csp(reduced_mwc)
    deleted, undeletable, left = preprocess(csp)
    report.deleted = deleted
    report.undeletable = undeletable
    report.reduced = left
    # terminal resolution in the original graph minus all deletions
    gone = set(forced) | set(deleted)
    alive = set(range(inst.graph.n)) - gone
    tset = set(inst.terminals)
    resolved = 0
    left_terms = 0
    for comp in connected_components(inst.graph, alive):
        ts = set(comp) & tset
        if len(ts) == 1:
            resolved += 1
        elif len(ts) > 1:
            left_terms += len(ts)
    report.resolved_terminals = resolved
    report.left_terminals = left_terms
    report.left_degree = sum(
        1 for v in left.state.phi0 if left.state.alive[v]
    )
    return report


def check_mwc_solution(inst: MwcInstance, solution) -> bool:
    from .graphs import is_multiway_cut

    return is_multiway_cut(inst, solution)


def check_oct_solution(inst: OctInstance, solution) -> bool:
    return is_bipartite_after(inst.graph, solution)
