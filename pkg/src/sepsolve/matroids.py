"""Prime-field linear algebra, randomized gammoid representations,
representative sets, and the kernelization routines built on them.

Everything works over a fixed prime field (default: the Mersenne prime
2^61 - 1, exact arithmetic on Python ints).  Gammoids are represented by
walk-generating matrices of a vertex-split digraph with random arc
weights: a column set is independent iff it is linked to the sources by
vertex-disjoint paths, up to a Schwartz-Zippel failure probability of
order n^3 / p per query.  Representations are therefore seeded, and every
kernel result is only as random as its seed.
"""

from __future__ import annotations

import itertools
import math
import random
from dataclasses import dataclass, field

from .graphs import Graph, MwcInstance, connected_components

DEFAULT_PRIME = (1 << 61) - 1


class ResourceFailure(RuntimeError):
    """A kernel computation would exceed the configured memory ceiling."""

    def __init__(self, message: str, estimated_bytes: int):
        super().__init__(message)
        self.estimated_bytes = estimated_bytes


# ---------------------------------------------------------------------------
# matrices over F_p
# ---------------------------------------------------------------------------


def row_reduce(rows: list[list[int]], p: int) -> tuple[list[list[int]], list[int]]:
    """In-place-free Gaussian elimination; returns (echelon form, pivot cols)."""
    m = [list(r) for r in rows]
    if not m:
        return [], []
    ncols = len(m[0])
    pivots: list[int] = []
    r = 0
    for c in range(ncols):
        piv = next((i for i in range(r, len(m)) if m[i][c] % p), None)
        if piv is None:
            continue
        m[r], m[piv] = m[piv], m[r]
        inv = pow(m[r][c], p - 2, p)
        m[r] = [(x * inv) % p for x in m[r]]
        for i in range(len(m)):
            if i != r and m[i][c]:
                f = m[i][c]
                mr = m[r]
                m[i] = [(x - f * y) % p for x, y in zip(m[i], mr)]
        pivots.append(c)
        r += 1
        if r == len(m):
            break
    return m, pivots


def matrix_rank(rows: list[list[int]], p: int) -> int:
    return len(row_reduce(rows, p)[1])


def _solve_transposed(iw: list[list[int]], rhs_cols: list[int], p: int) -> list[list[int]]:
    """Rows of iw^{-1} for the requested indices: solve iw^T x = e_i."""
    n = len(iw)
    # augment iw^T with unit columns for every requested row
    aug = [[iw[j][i] % p for j in range(n)] + [1 if i == r else 0 for r in rhs_cols]
           for i in range(n)]
    red, pivots = row_reduce(aug, p)
    if len(pivots) < n or any(c >= n for c in pivots[:n]):
        raise ValueError("walk matrix is singular; retry with a fresh seed")
    sol = [[0] * n for _ in rhs_cols]
    for i in range(n):
        c = pivots[i]
        for j, _ in enumerate(rhs_cols):
            sol[j][c] = red[i][n + j]
    return sol


# ---------------------------------------------------------------------------
# gammoid representations
# ---------------------------------------------------------------------------


@dataclass
class MatroidRepr:
    """Columns over F_p; independence = linear independence of columns."""

    prime: int
    r: int
    matrix: list[list[int]]           # r rows, one column per element
    labels: dict[object, int]         # ground element -> column index

    def column(self, e) -> list[int]:
        j = self.labels[e]
        return [row[j] for row in self.matrix]

    def columns(self, elems) -> list[list[int]]:
        idx = [self.labels[e] for e in elems]
        return [[row[j] for j in idx] for row in self.matrix]

    def independent(self, elems) -> bool:
        elems = list(elems)
        if len(elems) > self.r:
            return False
        block = self.columns(elems)
        return matrix_rank(block, self.prime) == len(elems)


def gammoid_representation(
    n: int,
    arcs,
    sources,
    ground,
    seed: int = 0,
    prime: int = DEFAULT_PRIME,
) -> MatroidRepr:
    """Linkage matroid of a digraph, one column per ground vertex.

    Vertex-split construction: each vertex becomes an `in -> out` arc and
    every digraph arc an `out -> in` arc, all with seeded random weights;
    the representation rows are source rows of the walk-generating matrix
    (I - W)^{-1}.  With probability at least 1 - O(n^3)/prime per query, a
    set W of ground columns is independent iff W is linked to the sources
    by vertex-disjoint paths.
    """
    rng = random.Random(seed)
    sources = list(sources)
    ground = list(ground)
    N = 2 * n
    w = [[0] * N for _ in range(N)]
    for v in range(n):
        w[2 * v][2 * v + 1] = rng.randrange(1, prime)
    for u, v in arcs:
        w[2 * u + 1][2 * v] = rng.randrange(1, prime)
    iw = [[(-w[i][j]) % prime for j in range(N)] for i in range(N)]
    for i in range(N):
        iw[i][i] = (iw[i][i] + 1) % prime
    rows = _solve_transposed(iw, [2 * s for s in sources], prime)
    labels = {g: j for j, g in enumerate(ground)}
    matrix = [[rows[i][2 * g + 1] for g in ground] for i in range(len(sources))]
    return MatroidRepr(prime, len(sources), matrix, labels)


def truncate_representation(repr_: MatroidRepr, r: int, seed: int = 0) -> MatroidRepr:
    """Multiply by a random r-row matrix; preserves independence up to r."""
    rng = random.Random(seed)
    p = repr_.prime
    mix = [
        [rng.randrange(p) for _ in range(repr_.r)]
        for _ in range(r)
    ]
    ncols = len(repr_.matrix[0]) if repr_.matrix else 0
    out = [
        [
            sum(mix[i][t] * repr_.matrix[t][j] for t in range(repr_.r)) % p
            for j in range(ncols)
        ]
        for i in range(r)
    ]
    return MatroidRepr(p, r, out, dict(repr_.labels))


# ---------------------------------------------------------------------------
# representative sets
# ---------------------------------------------------------------------------


@dataclass
class TupleFamily:
    a: int
    tuples: list[tuple]   # each a ground-element a-tuple


def representative_set(
    repr_: MatroidRepr,
    fam: TupleFamily,
    mem_limit: int | None = None,
) -> TupleFamily:
    """Subfamily preserving all disjoint independent completions.

    Each a-tuple A maps to the vector w_A of its a x a minors over all
    row a-subsets; keeping a maximal linearly independent set of the w_A
    preserves, for every b-set B (b = r - a), the existence of some kept
    A* with A* disjoint from B and A* union B independent.  The output
    never exceeds C(r, a) tuples.
    """
    a = fam.a
    r = repr_.r
    p = repr_.prime
    if a > r:
        raise ValueError(f"tuple size {a} exceeds rank {r}")
    row_subsets = list(itertools.combinations(range(r), a))
    dim = len(row_subsets)
    if mem_limit is not None:
        # one float-free python int is ~28 bytes small, ~40 with list slots
        est = dim * (dim + 1) * 48
        if est > mem_limit:
            raise ResourceFailure(
                f"representative set needs about {est} bytes (C({r},{a})={dim})",
                est,
            )
    basis: list[list[int]] = []          # reduced rows, echelon by lead index
    leads: list[int] = []
    kept: list[tuple] = []
    for A in fam.tuples:
        block = repr_.columns(A)         # r x a
        if a == 0:
            continue
        w = [_det([[block[i][j] for j in range(a)] for i in rs], p) for rs in row_subsets]
        # reduce against the kept basis
        for lead, brow in zip(leads, basis):
            if w[lead]:
                f = (w[lead] * pow(brow[lead], p - 2, p)) % p
                w = [(x - f * y) % p for x, y in zip(w, brow)]
        lead = next((i for i, x in enumerate(w) if x), None)
        if lead is None:
            continue
        kept.append(A)
        basis.append(w)
        leads.append(lead)
    assert len(kept) <= dim, "representative family exceeds C(r, a)"
    return TupleFamily(a, kept)


def _det(m: list[list[int]], p: int) -> int:
    n = len(m)
    if n == 1:
        return m[0][0] % p
    if n == 2:
        return (m[0][0] * m[1][1] - m[0][1] * m[1][0]) % p
    if n == 3:
        return (
            m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
            - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
            + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
        ) % p
    m = [list(r) for r in m]
    det = 1
    for c in range(n):
        piv = next((i for i in range(c, n) if m[i][c] % p), None)
        if piv is None:
            return 0
        if piv != c:
            m[c], m[piv] = m[piv], m[c]
            det = -det
        det = (det * m[c][c]) % p
        inv = pow(m[c][c], p - 2, p)
        for i in range(c + 1, n):
            if m[i][c]:
                f = (m[i][c] * inv) % p
                m[i] = [(x - f * y) % p for x, y in zip(m[i], m[c])]
    return det % p


# ---------------------------------------------------------------------------
# odd cycle transversal kernel
# ---------------------------------------------------------------------------


def greedy_oct_approx(g: Graph) -> list[int]:
    """Delete a vertex of any odd cycle found by BFS coloring, repeat."""
    deleted: set[int] = set()
    while True:
        color: dict[int, int] = {}
        bad_edge = None
        for s in range(g.n):
            if s in deleted or s in color:
                continue
            color[s] = 0
            queue = [s]
            while queue and bad_edge is None:
                u = queue.pop()
                for w in g.adj[u]:
                    if w in deleted:
                        continue
                    if w not in color:
                        color[w] = 1 - color[u]
                        queue.append(w)
                    elif color[w] == color[u]:
                        bad_edge = (u, w)
                        break
            if bad_edge:
                break
        if bad_edge is None:
            return sorted(deleted)
        u, w = bad_edge
        deleted.add(max((u, w), key=lambda x: (g.degree(x), -x)))


def _with_uniform_block(repr_: MatroidRepr, extra: list, r_u: int, seed: int) -> MatroidRepr:
    """Direct sum with a random rank-r_u block holding one fresh column per
    element of `extra`; generic columns there act as budget slack."""
    rng = random.Random(seed)
    p = repr_.prime
    r0 = repr_.r
    ncols = len(repr_.matrix[0]) if repr_.matrix else 0
    labels = dict(repr_.labels)
    matrix = [list(row) + [0] * len(extra) for row in repr_.matrix]
    matrix += [[0] * (ncols + len(extra)) for _ in range(r_u)]
    for j, e in enumerate(extra):
        labels[e] = ncols + j
        for i in range(r_u):
            matrix[r0 + i][ncols + j] = rng.randrange(p)
    return MatroidRepr(p, r0 + r_u, matrix, labels)


@dataclass
class OctKernelResult:
    undeletable: list[int]
    deletable: list[int]
    approx: list[int]
    rank: int
    family_size: int
    kept_size: int
    rounds: int
    verified: bool


def _oct_matroid_rounds(g: Graph, y: list[int], seed: int, prime: int,
                        mem_limit: int | None):
    """Representative-set pruning rounds on the parity double cover.

    States (v, side) flip sides along edges, so odd structures connect a
    vertex's two states.  Sources are pendant copies of both states of
    every approximate-solution vertex; a rank-|Y| random block supplies a
    private budget-slack column per vertex; each vertex contributes the
    triple (state 0, state 1, slack).  Triples a 3-representative set can
    drop mark their vertices as candidates for undeletability; rounds
    rerun with fresh randomness until stable.
    """
    n = g.n

    def st(v, s):
        return 2 * v + s

    pend_base = 2 * n
    total = pend_base + 2 * len(y)
    arcs: list[tuple[int, int]] = []
    for u, v in g.edges:
        for s in (0, 1):
            arcs.append((st(u, s), st(v, 1 - s)))
            arcs.append((st(v, s), st(u, 1 - s)))
    sources = []
    for i, yv in enumerate(y):
        for s in (0, 1):
            pid = pend_base + 2 * i + s
            arcs.append((pid, st(yv, s)))
            sources.append(pid)
    ground = [st(v, s) for v in range(n) for s in (0, 1)]
    r_u = max(len(y), 2)

    undeletable: set[int] = set()
    rounds = 0
    fam_size = kept_size = rank = 0
    while True:
        rounds += 1
        base = gammoid_representation(
            total, arcs, sources, ground, seed=seed + 101 * rounds, prime=prime
        )
        repr_ = _with_uniform_block(
            base, [("slack", v) for v in range(n)], r_u, seed + 7 + 101 * rounds
        )
        rank = repr_.r
        deletable_now = [v for v in range(n) if v not in undeletable]
        triples = [
            (st(v, 0), st(v, 1), ("slack", v))
            for v in deletable_now
            if repr_.independent((st(v, 0), st(v, 1), ("slack", v)))
        ]
        fam_size = len(triples)
        rep = representative_set(repr_, TupleFamily(3, triples), mem_limit=mem_limit)
        kept_size = len(rep.tuples)
        kept_vertices = {A[0] // 2 for A in rep.tuples}
        new_undeletable = [v for v in deletable_now if v not in kept_vertices]
        if not new_undeletable:
            break
        undeletable.update(new_undeletable)
    return undeletable, rank, fam_size, kept_size, rounds


def _oct_avoidance_feasible(g: Graph, avoid: set[int], budget: int) -> bool:
    """Is there an odd cycle transversal of the given size avoiding `avoid`?"""
    from .branching import SolverVariant, solve_decision, with_forbidden
    from .frontends import oct_to_csp
    from .graphs import OctInstance

    csp = oct_to_csp(OctInstance(g, budget))
    csp = with_forbidden(csp, avoid)
    return solve_decision(csp, SolverVariant("lb2", False)).feasible


def oct_kernel(
    g: Graph,
    y: list[int] | None = None,
    seed: int = 0,
    prime: int = DEFAULT_PRIME,
    mem_limit: int | None = None,
    verify: bool = True,
) -> OctKernelResult:
    """Vertices avoidable by some optimal odd cycle transversal.

    The representative-set machinery proposes the undeletable set; because
    its exchange step is randomized, the proposal is certified by one
    solver run (is there an optimal solution avoiding the whole set?) and
    retried under fresh seeds if certification ever fails, shrinking the
    set as a last resort.  |deletable| <= 8|Y|^3 on every run.
    """
    if y is None:
        y = greedy_oct_approx(g)
    from .frontends import is_bipartite_after

    if not is_bipartite_after(g, y):
        raise ValueError("approximate solution does not make the graph bipartite")
    n = g.n
    if not y:
        return OctKernelResult(sorted(range(n)), [], [], 0, 0, 0, 0, True)
    if len(y) == 1:
        # optimum is exactly one; keep one solution vertex deletable so the
        # whole undeletable set stays jointly avoidable by that optimum
        sols = [v for v in range(n) if is_bipartite_after(g, [v])]
        keep = sols[0]
        und = sorted(v for v in range(n) if v != keep)
        return OctKernelResult(und, [keep], list(y), 0, 0, 0, 0, True)

    verified = False
    undeletable: set[int] = set()
    rank = fam_size = kept_size = rounds = 0
    budget = None
    for attempt in range(4):
        undeletable, rank, fam_size, kept_size, rounds = _oct_matroid_rounds(
            g, y, seed + 1009 * attempt, prime, mem_limit
        )
        if not verify:
            break
        if budget is None:
            from .branching import SolverVariant, solve_optimum
            from .frontends import oct_to_csp
            from .graphs import OctInstance

            budget = solve_optimum(
                oct_to_csp(OctInstance(g)), SolverVariant("lb2", False)
            ).opt
        if _oct_avoidance_feasible(g, undeletable, budget):
            verified = True
            break
    if verify and not verified:
        # keep a jointly certified subset, absorbing chunks greedily
        safe: set[int] = set()
        chunk = sorted(undeletable)
        step = max(1, len(chunk) // 4)
        for i in range(0, len(chunk), step):
            cand = safe | set(chunk[i : i + step])
            if _oct_avoidance_feasible(g, cand, budget):
                safe = cand
        undeletable = safe
        verified = True
    deletable = sorted(v for v in range(n) if v not in undeletable)
    assert len(deletable) <= 8 * len(y) ** 3, "kernel exceeds the 8|Y|^3 bound"
    return OctKernelResult(
        sorted(undeletable), deletable, list(y), rank, fam_size, kept_size,
        rounds, verified,
    )


# ---------------------------------------------------------------------------
# multiway cut kernel
# ---------------------------------------------------------------------------


@dataclass
class MwcKernelResult:
    instance: MwcInstance
    removed: list[int]            # contracted away (avoidable) vertices
    forced: list[int]             # deletions forced by re-preprocessing
    k_left: int
    rank: int
    family_size: int
    kept_size: int
    rounds: int
    verified: bool


def _clique_away(g: Graph, v: int) -> Graph:
    """Delete v after turning its neighborhood into a clique.

    Multiway cuts of the result are exactly the multiway cuts of g that
    avoid v: paths through v turn into clique edges and back.
    """
    new_edges = set(g.edges)
    neigh = list(g.adj[v])
    for i, a in enumerate(neigh):
        for b in neigh[i + 1:]:
            new_edges.add((a, b) if a < b else (b, a))
    new_edges = {e for e in new_edges if v not in e}
    return Graph.build(g.n, new_edges)


def _mwc_opt(inst: MwcInstance, limit: int | None = None) -> int | None:
    from .branching import SolverVariant, solve_optimum
    from .frontends import mwc_simple_preprocess, mwc_to_csp

    try:
        forced, red = mwc_simple_preprocess(inst)
    except Exception:
        return None
    res = solve_optimum(mwc_to_csp(red), SolverVariant("lb2", False))
    if res.opt is None:
        return None
    return len(forced) + res.opt


def _mwc_matroid_candidates(
    g: Graph, terms: list[int], k: int, seed: int, prime: int,
    mem_limit: int | None,
) -> tuple[list[int], int, int, int]:
    """Representative-set pruning pass; returns avoidable candidates.

    Sources are pendant copies of the terminal boundary N(T); each
    non-terminal vertex contributes one tap column per terminal (its
    linkage column embedded in that terminal's private coordinate block)
    plus a budget-slack column of rank k, probing the vertex's cut role
    toward every terminal class under the shared budget.
    """
    tset = set(terms)
    keep = [v for v in range(g.n) if v not in tset]
    nT = sorted({w for t in terms for w in g.adj[t] if w not in tset})
    arcs = []
    for u, v in g.edges:
        if u in tset or v in tset:
            continue
        arcs.append((u, v))
        arcs.append((v, u))
    pend = {}
    nid = g.n
    sources = []
    for u in nT:
        pend[u] = nid
        arcs.append((nid, u))
        sources.append(nid)
        nid += 1
    if not keep:
        return [], len(sources), 0, 0
    base = gammoid_representation(nid, arcs, sources, keep, seed=seed, prime=prime)
    rng = random.Random(seed + 13)
    p = prime
    t_cnt = len(terms)
    r0 = base.r
    slack_rank = max(k, 1, (t_cnt + 1) - r0 * t_cnt)
    nrows = r0 * t_cnt + slack_rank
    labels = {}
    matrix = [[0] * (len(keep) * (t_cnt + 1)) for _ in range(nrows)]
    j = 0
    for v in keep:
        col = base.column(v)
        for ti in range(t_cnt):
            labels[("tap", v, ti)] = j
            for i in range(r0):
                matrix[ti * r0 + i][j] = col[i]
            j += 1
        labels[("slack", v)] = j
        for i in range(slack_rank):
            matrix[r0 * t_cnt + i][j] = rng.randrange(p)
        j += 1
    repr_ = MatroidRepr(p, nrows, matrix, labels)
    tuples = []
    for v in keep:
        A = tuple(("tap", v, ti) for ti in range(t_cnt)) + (("slack", v),)
        if repr_.independent(A):
            tuples.append(A)
    rep = representative_set(repr_, TupleFamily(t_cnt + 1, tuples), mem_limit=mem_limit)
    assert len(rep.tuples) <= math.comb(repr_.r, t_cnt + 1)
    kept_vertices = {A[0][1] for A in rep.tuples}
    avoid = [v for v in keep if v not in kept_vertices]
    return avoid, repr_.r, len(tuples), len(rep.tuples)


def mwc_kernel(
    inst: MwcInstance,
    k: int,
    seed: int = 0,
    prime: int = DEFAULT_PRIME,
    mem_limit: int | None = None,
    verify: bool = True,
    max_rounds: int = 64,
) -> MwcKernelResult:
    """Shrink a preprocessed multiway cut instance, preserving the optimum.

    For a vertex outside the representative family there is an optimal
    solution avoiding it, so it is contracted away (neighborhood turned
    into a clique) and the computation restarts; re-preprocessing after a
    contraction may force further deletions, which lower the remaining
    budget.  `k` must be the true optimum of `inst`.  Each contraction
    batch is certified against the solver (the optimum must stay k) and
    retried with a fresh seed, dropped on repeated failure.
    """
    terms = list(inst.terminals)
    g = inst.graph
    removed: list[int] = []
    forced_all: list[int] = []
    k_left = k
    rank = fam_size = kept_size = 0
    rounds = 0
    verified = True
    attempt = 0
    if k == 0:
        # terminals already separated: the empty optimum avoids everything
        tset = set(terms)
        for v in range(g.n):
            if v not in tset:
                g = _clique_away(g, v)
                removed.append(v)
        reduced = MwcInstance(g, inst.terminals, 0)
        return MwcKernelResult(reduced, sorted(removed), [], 0, 0, 0, 0, 1, True)
    while rounds < max_rounds:
        rounds += 1
        avoid, rank, fam_size, kept_size = _mwc_matroid_candidates(
            g, terms, k_left, seed + 101 * rounds + 1009 * attempt, prime, mem_limit
        )
        avoid = [v for v in avoid if v not in removed]
        if not avoid:
            break
        g2 = g
        for v in avoid:
            g2 = _clique_away(g2, v)
        cand = MwcInstance(g2, inst.terminals, inst.budget)
        if verify:
            opt2 = _mwc_opt(cand)
            if opt2 != k_left:
                attempt += 1
                if attempt >= 3:
                    break  # keep the instance as is; candidates uncertified
                continue
        attempt = 0
        g = g2
        removed.extend(avoid)
        # contraction can create new two-terminal neighbors; re-preprocess
        from .frontends import mwc_simple_preprocess

        forced, red = mwc_simple_preprocess(MwcInstance(g, inst.terminals, None))
        if forced:
            forced_all.extend(sorted(forced))
            g = red.graph
            k_left -= len(forced)
    reduced = MwcInstance(g, inst.terminals, k_left)
    return MwcKernelResult(
        reduced, sorted(removed), sorted(forced_all), k_left,
        rank, fam_size, kept_size, rounds, verified,
    )
