"""Binary CSP instances with the 0/1/all property and their deletion ops.

A constraint on an ordered pair (u, v) is a relation over D x D such that
fixing either side leaves 0, 1 or |D| choices for the other.  Constraints
are stored in one of three tagged forms: a permutation of D, a "2-SAT"
clause (u = a) or (v = b), or an explicit relation; the first two cover
everything the front-ends generate and answer successor queries in O(1).

Instances expose two persistent reductions: proclaiming a vertex deleted
(spend one unit of budget) and proclaiming an assigned vertex undeletable
(propagate its constraints, then drop it for free).  The branching solver
works on a mutable twin of the same state with an undo trail.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field


class BudgetExhausted(RuntimeError):
    """A forced deletion was required while the budget was already zero."""


class ForbiddenDeletion(RuntimeError):
    """A forced deletion hit a vertex declared undeletable by the caller."""


def validate_01all(rel: set[tuple[int, int]], d: int) -> bool:
    """True iff every row and column of the relation has 0, 1 or d entries."""
    for a, b in rel:
        if not (0 <= a < d and 0 <= b < d):
            return False
    for a in range(d):
        row = sum(1 for x, _ in rel if x == a)
        if row not in (0, 1, d):
            return False
    for b in range(d):
        col = sum(1 for _, y in rel if y == b)
        if col not in (0, 1, d):
            return False
    return True


PERM = "PERM"
TWOSAT = "TWOSAT"
EXPLICIT = "REL"


@dataclass(frozen=True)
class Constraint:
    """0/1/all relation on an ordered pair, stored in a tagged form.

    kind PERM:    data is a tuple pi with (a, b) allowed iff b == pi[a].
    kind TWOSAT:  data is (a, b) with (x, y) allowed iff x == a or y == b.
    kind REL:     data is a frozenset of allowed pairs.
    """

    d: int
    kind: str
    data: object

    @staticmethod
    def permutation(d: int, pi) -> "Constraint":
        pi = tuple(pi)
        if sorted(pi) != list(range(d)):
            raise ValueError(f"{pi} is not a permutation of 0..{d - 1}")
        return Constraint(d, PERM, pi)

    @staticmethod
    def equality(d: int) -> "Constraint":
        return Constraint.permutation(d, range(d))

    @staticmethod
    def not_equal() -> "Constraint":
        return Constraint.permutation(2, (1, 0))

    @staticmethod
    def twosat(d: int, a: int, b: int) -> "Constraint":
        if not (0 <= a < d and 0 <= b < d):
            raise ValueError("clause values out of domain")
        return Constraint(d, TWOSAT, (a, b))

    @staticmethod
    def relation(d: int, pairs) -> "Constraint":
        rel = set(pairs)
        if not validate_01all(rel, d):
            raise ValueError("relation violates the 0/1/all property")
        return Constraint(d, EXPLICIT, frozenset(rel))

    def allows(self, a: int, b: int) -> bool:
        if self.kind == PERM:
            return self.data[a] == b
        if self.kind == TWOSAT:
            ca, cb = self.data
            return a == ca or b == cb
        return (a, b) in self.data

    def successors(self, a: int) -> tuple[int, ...]:
        """All b with (a, b) allowed."""
        if self.kind == PERM:
            return (self.data[a],)
        if self.kind == TWOSAT:
            ca, cb = self.data
            return tuple(range(self.d)) if a == ca else (cb,)
        return tuple(sorted(b for x, b in self.data if x == a))

    def unique_successor(self, a: int) -> int | None:
        """The forced value of the other endpoint, if exactly one remains."""
        if self.kind == PERM:
            return self.data[a]
        if self.kind == TWOSAT:
            ca, cb = self.data
            return None if a == ca else cb
        succ = self.successors(a)
        return succ[0] if len(succ) == 1 else None

    def reversed(self) -> "Constraint":
        if self.kind == PERM:
            inv = [0] * self.d
            for a, b in enumerate(self.data):
                inv[b] = a
            return Constraint(self.d, PERM, tuple(inv))
        if self.kind == TWOSAT:
            a, b = self.data
            return Constraint(self.d, TWOSAT, (b, a))
        return Constraint(self.d, EXPLICIT, frozenset((b, a) for a, b in self.data))

    def as_relation(self) -> frozenset[tuple[int, int]]:
        if self.kind == EXPLICIT:
            return self.data
        return frozenset(
            (a, b) for a in range(self.d) for b in range(self.d) if self.allows(a, b)
        )

    def dump(self) -> str:
        if self.kind == PERM:
            return "PERM " + " ".join(map(str, self.data))
        if self.kind == TWOSAT:
            return f"TWOSAT {self.data[0]} {self.data[1]}"
        return "REL " + " ".join(f"{a}:{b}" for a, b in sorted(self.data))


@dataclass
class CspState:
    """Mutable core shared by the persistent API and the solver.

    `constraints[v]` maps a live neighbor u to the constraint psi_{v,u}
    (oriented from v).  `orig_ids` maps internal vertices to the caller's
    id space so deletions can be reported in original coordinates.
    """

    d: int
    n: int
    constraints: list[dict[int, Constraint]]
    phi0: dict[int, int]
    k: int
    alive: list[bool]
    orig_ids: tuple[int, ...]
    value_symmetric: bool = False
    deleted_log: list[int] = field(default_factory=list)
    undeletable_log: list[int] = field(default_factory=list)
    forbidden: frozenset[int] = frozenset()   # never deletable (internal ids)

    def clone(self) -> "CspState":
        return CspState(
            self.d,
            self.n,
            [dict(cs) for cs in self.constraints],
            dict(self.phi0),
            self.k,
            list(self.alive),
            self.orig_ids,
            self.value_symmetric,
            list(self.deleted_log),
            list(self.undeletable_log),
            self.forbidden,
        )

    def live_vertices(self) -> list[int]:
        return [v for v in range(self.n) if self.alive[v]]

    def neighbors(self, v: int):
        return [u for u in self.constraints[v] if self.alive[u]]

    # -- event log with undo ------------------------------------------------

    def _drop_vertex(self, v: int, trail: list | None):
        self.alive[v] = False
        removed_phi = self.phi0.pop(v, None)
        if trail is not None:
            trail.append(("vertex", v, removed_phi))

    def _assign(self, v: int, a: int, trail: list | None):
        self.phi0[v] = a
        if trail is not None:
            trail.append(("assign", v))

    def _spend(self, trail: list | None):
        self.k -= 1
        if trail is not None:
            trail.append(("spend",))

    def undo(self, trail: list, mark: int):
        while len(trail) > mark:
            ev = trail.pop()
            if ev[0] == "vertex":
                _, v, removed_phi = ev
                self.alive[v] = True
                if removed_phi is not None:
                    self.phi0[v] = removed_phi
            elif ev[0] == "assign":
                del self.phi0[ev[1]]
            elif ev[0] == "spend":
                self.k += 1
            elif ev[0] == "deleted_log":
                self.deleted_log.pop()
            elif ev[0] == "undeletable_log":
                self.undeletable_log.pop()

    # -- reductions ----------------------------------------------------------

    def proclaim_deleted(self, v: int, trail: list | None = None):
        if not self.alive[v]:
            raise ValueError(f"vertex {v} is not live")
        if v in self.forbidden:
            raise ForbiddenDeletion(f"vertex {self.orig_ids[v]} is undeletable")
        if self.k <= 0:
            raise BudgetExhausted(f"cannot delete {v}: budget exhausted")
        self._spend(trail)
        self._drop_vertex(v, trail)
        self.deleted_log.append(self.orig_ids[v])
        if trail is not None:
            trail.append(("deleted_log",))

    def proclaim_undeletable(self, v: int, trail: list | None = None):
        """Propagate phi0(v) through every live constraint, then drop v.

        Neighbors whose constraint becomes violated or empty are deleted
        (spending budget); neighbors forced to a unique value get assigned.
        """
        if not self.alive[v]:
            raise ValueError(f"vertex {v} is not live")
        if v not in self.phi0:
            raise ValueError(f"vertex {v} has no assigned value")
        a = self.phi0[v]
        for u in list(self.constraints[v]):
            if not self.alive[u]:
                continue
            cons = self.constraints[v][u]
            succ = cons.successors(a)
            if u in self.phi0:
                if not cons.allows(a, self.phi0[u]):
                    self.proclaim_deleted(u, trail)
            elif len(succ) == 0:
                self.proclaim_deleted(u, trail)
            elif len(succ) == 1:
                self._assign(u, succ[0], trail)
        self.undeletable_log.append(self.orig_ids[v])
        if trail is not None:
            trail.append(("undeletable_log",))
        self._drop_vertex(v, trail)


@dataclass(frozen=True)
class CspInstance:
    """Persistent view over a CspState; reductions return new instances."""

    state: CspState

    @staticmethod
    def build(
        d: int,
        n: int,
        constraints,
        phi0=None,
        k: int = 0,
        orig_ids=None,
        value_symmetric: bool = False,
    ) -> "CspInstance":
        """`constraints` is an iterable of (u, v, Constraint oriented u->v)."""
        if d < 1 or n < 0 or k < 0:
            raise ValueError("bad instance parameters")
        table: list[dict[int, Constraint]] = [{} for _ in range(n)]
        for u, v, cons in constraints:
            if u == v or not (0 <= u < n and 0 <= v < n):
                raise ValueError(f"bad constraint pair ({u},{v})")
            if cons.d != d:
                raise ValueError("constraint domain mismatch")
            if not validate_01all(set(cons.as_relation()), d):
                raise ValueError("constraint violates 0/1/all")
            if v in table[u]:
                raise ValueError(f"duplicate constraint on ({u},{v})")
            table[u][v] = cons
            table[v][u] = cons.reversed()
        phi0 = dict(phi0 or {})
        for v, a in phi0.items():
            if not (0 <= v < n and 0 <= a < d):
                raise ValueError(f"bad assignment {v}={a}")
        if orig_ids is None:
            orig_ids = tuple(range(n))
        return CspInstance(
            CspState(d, n, table, phi0, k, [True] * n, tuple(orig_ids), value_symmetric)
        )

    # thin accessors

    @property
    def d(self) -> int:
        return self.state.d

    @property
    def k(self) -> int:
        return self.state.k

    @property
    def phi0(self) -> dict[int, int]:
        return dict(self.state.phi0)

    def live_vertices(self) -> list[int]:
        return self.state.live_vertices()

    def num_live(self) -> int:
        return len(self.state.live_vertices())

    def proclaim_deleted(self, v: int) -> "CspInstance":
        s = self.state.clone()
        s.proclaim_deleted(v)
        return CspInstance(s)

    def proclaim_undeletable(self, v: int) -> "CspInstance":
        s = self.state.clone()
        s.proclaim_undeletable(v)
        return CspInstance(s)

    def dump(self) -> str:
        """One line per live constraint: "u v TAG data" (golden-test format)."""
        s = self.state
        out = []
        for u in range(s.n):
            if not s.alive[u]:
                continue
            for v, cons in sorted(s.constraints[u].items()):
                if u < v and s.alive[v]:
                    out.append(f"{s.orig_ids[u]} {s.orig_ids[v]} {cons.dump()}")
        return "\n".join(out)


# ---------------------------------------------------------------------------
# implicational paths
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ImplPath:
    """Sequence of (vertex, value) steps, each forced by a unique successor."""

    steps: tuple[tuple[int, int], ...]

    def __len__(self):
        return len(self.steps)

    def vertices(self) -> list[int]:
        return [v for v, _ in self.steps]


def lane_successors(state: CspState, v: int, a: int):
    """All (u, b) with b the unique successor of a under psi_{v,u}."""
    out = []
    for u, cons in state.constraints[v].items():
        if not state.alive[u]:
            continue
        b = cons.unique_successor(a)
        if b is not None:
            out.append((u, b))
    return out


def is_conflicting(state: CspState, steps) -> bool:
    v, a = steps[-1]
    return v in state.phi0 and state.phi0[v] != a


def enumerate_paths_of_state(
    state: CspState, max_len: int | None = None, cap: int | None = None
) -> list[tuple[tuple[int, int], ...]] | None:
    """All conflicting paths of a state as step tuples; None if cap exceeded."""
    if max_len is None:
        max_len = state.n * state.d
    found: list[tuple[tuple[int, int], ...]] = []
    overflow = False

    for v0 in sorted(state.phi0):
        if not state.alive[v0] or overflow:
            continue
        a0 = state.phi0[v0]
        stack: list[tuple[int, int]] = [(v0, a0)]
        seen = {(v0, a0)}

        def dfs():
            nonlocal overflow
            if overflow:
                return
            if is_conflicting(state, stack):
                found.append(tuple(stack))
                if cap is not None and len(found) > cap:
                    overflow = True
                    return
                # a conflicting prefix can still extend to further conflicts
            if len(stack) >= max_len:
                return
            v, a = stack[-1]
            for u, b in sorted(lane_successors(state, v, a)):
                if (u, b) in seen:
                    continue
                seen.add((u, b))
                stack.append((u, b))
                dfs()
                stack.pop()
                seen.remove((u, b))

        dfs()
    if overflow:
        return None
    return found


def enumerate_conflicting_paths(inst: CspInstance, max_len: int | None = None) -> list[ImplPath]:
    """All conflicting paths with pairwise-distinct steps, up to max_len.

    Exhaustive DFS; intended as an oracle for small instances.
    """
    steps = enumerate_paths_of_state(inst.state, max_len)
    return [ImplPath(s) for s in steps]
