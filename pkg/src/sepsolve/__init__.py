"""Solvers, kernels and benchmark tooling for unweighted vertex-deletion
odd cycle transversal and multiway cut, built on a generic 0/1/all
constraint-deletion branching engine."""

from .graphs import (
    Graph,
    MwcInstance,
    OctInstance,
    ParseError,
    UncuttableError,
    InfeasibleInstanceError,
    connected_components,
    isolating_cut_approx,
    is_multiway_cut,
    min_vertex_cut,
    parse_mwc,
    parse_oct,
    parse_opt,
    write_mwc,
    write_oct,
    write_opt,
)
from .csp import (
    BudgetExhausted,
    Constraint,
    CspInstance,
    ImplPath,
    enumerate_conflicting_paths,
    validate_01all,
)
from .relax import (
    CoverEngine,
    EngineError,
    Packing,
    extract_cover,
    lb2_value,
    max_halfintegral_packing,
    persistence_reduce,
    slack,
)
from .branching import (
    SolverVariant,
    SolveResult,
    OptimumResult,
    preprocess,
    solve_decision,
    solve_optimum,
    solve_with_components,
)
from .frontends import (
    check_mwc_solution,
    check_oct_solution,
    is_bipartite_after,
    lift_solution,
    mwc_simple_preprocess,
    mwc_to_csp,
    oct_to_csp,
)

__all__ = [name for name in dir() if not name.startswith("_")]
