"""Sparse transportation LPs with a multilevel active-set strategy.

The package discretizes transport problems between densities on unions of
boxes, solves the resulting transportation linear programs with a
spanning-tree simplex on a reduced pair set, and drives mesh refinement
with dual-based activation so the solved problems stay sparse.
"""

from .mesh import (
    Domain,
    Mesh,
    MeshConstructionError,
    build_mesh,
    dump_mesh,
    interpolate_nodal,
    interval,
    nested_indices,
    prolongate,
    rectangle,
    refine,
)
from .measure import (
    DiscreteMeasure,
    InvalidDensityError,
    discretize_density,
    pair,
)
from .transport_core import (
    ActiveSet,
    CallableCost,
    FullProblemTooLarge,
    PolynomialCost,
    TransportSolution,
    assemble,
    solve_full,
    solve_reduced,
)
from .active_set import (
    DriverError,
    LevelReport,
    MultilevelParams,
    build_active_set,
    check_optimality,
    complete_feasible,
    multilevel_solve,
)
from .problems import (
    ExactSolution,
    Problem,
    make_problem,
    multiplier_difference_error,
    multiplier_error,
    oscillating_profile,
    reference_cost,
)
from .cli import RunConfig, observed_order, run

__version__ = "0.1.0"

__all__ = [
    "ActiveSet",
    "CallableCost",
    "DiscreteMeasure",
    "Domain",
    "DriverError",
    "ExactSolution",
    "FullProblemTooLarge",
    "InvalidDensityError",
    "LevelReport",
    "Mesh",
    "MeshConstructionError",
    "MultilevelParams",
    "PolynomialCost",
    "Problem",
    "RunConfig",
    "TransportSolution",
    "assemble",
    "build_active_set",
    "build_mesh",
    "check_optimality",
    "complete_feasible",
    "discretize_density",
    "dump_mesh",
    "interpolate_nodal",
    "interval",
    "make_problem",
    "multilevel_solve",
    "multiplier_difference_error",
    "multiplier_error",
    "nested_indices",
    "observed_order",
    "oscillating_profile",
    "pair",
    "prolongate",
    "rectangle",
    "reference_cost",
    "refine",
    "run",
    "solve_full",
    "solve_reduced",
]
