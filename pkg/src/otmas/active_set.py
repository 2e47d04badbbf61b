"""Multilevel active-set driver for sparse transportation problems.

One level works as follows: approximate duals predict which pairs can carry
mass (those within an activation threshold of dual tightness), the pair set
is enlarged until it supports a feasible plan, the reduced problem is
solved, and the resulting duals are checked for feasibility on the full
pair grid within an optimality tolerance.  Both the threshold and the
tolerance scale with h^2.  A failed check doubles the activation constant
and repeats the level; a passed check refines both meshes, prolongates the
duals, and halves the activation constant.

Full-grid scans stream over blocks of rows, so the dense cost matrix is
never materialized and memory stays proportional to M + N + |A|.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field, replace

import numpy as np

from .measure import DiscreteMeasure, discretize_density
from .mesh import Mesh, build_mesh, prolongate, refine
from .transport_core import (
    ActiveSet,
    DEFAULT_FULL_LP_CAP,
    TransportSolution,
    assemble,
    solve_full,
    solve_reduced,
)

# feasibility slack granted when hunting for violated dual constraints;
# solver duals are only reliable to this resolution
DUAL_FEASIBILITY_SLACK = 1e-9

DEFAULT_BLOCK_ROWS = 128


class DriverError(RuntimeError):
    pass


@dataclass
class MultilevelParams:
    """Knobs of the multilevel driver.

    theta_act scales the activation threshold theta_act * h^2 and c_opt the
    optimality tolerance c_opt * h^2.  When auto_tune_theta is set, the
    starting theta_act is calibrated on the coarsest level by repeated
    halving until the optimality check first fails (at most
    auto_tune_max_halvings times), keeping the last value that passed.
    The cap stays small because the coarsest check runs against exact
    duals and may never fail, while every halving kept tends to cost a
    matching tolerance doubling once the duals are prolongated.
    """

    theta_act: float = 1.0
    c_opt: float = 1.0
    level_min: int = 0
    level_max: int = 0
    max_tolerance_increases: int = 25
    coarse_init: bool = True
    auto_tune_theta: bool = False
    auto_tune_max_halvings: int = 2
    block_rows: int = DEFAULT_BLOCK_ROWS

    def __post_init__(self):
        if self.theta_act <= 0 or self.c_opt <= 0:
            raise ValueError("theta_act and c_opt must be positive")
        if self.level_min < 0 or self.level_max < self.level_min:
            raise ValueError("need 0 <= level_min <= level_max")
        if self.max_tolerance_increases < 0:
            raise ValueError("max_tolerance_increases must be nonnegative")


@dataclass
class LevelReport:
    """Outcome of one level of the multilevel iteration."""

    level: int
    m: int
    n: int
    active_cardinality: int
    tolerance_increases: int
    objective: float  # in the units of the undiscretized first marginal
    wall_time: float
    violation_counts: list[int] = field(default_factory=list)


def _pairwise_block(cost, x_block, ys):
    return np.asarray(cost.pairwise(x_block, ys), dtype=float)


def build_active_set(phi, psi, cost, mesh_x: Mesh, mesh_y: Mesh,
                     threshold: float, *,
                     block_rows: int = DEFAULT_BLOCK_ROWS) -> ActiveSet:
    """All pairs with phi_i + psi_j >= c(x_i, y_j) - threshold.

    The comparison is exact (no extra floating slack); the scan streams row
    blocks over the full grid.
    """
    if not threshold >= 0.0:
        raise ValueError("activation threshold must be nonnegative")
    phi = np.asarray(phi, dtype=float)
    psi = np.asarray(psi, dtype=float)
    xs, ys = mesh_x.nodes, mesh_y.nodes
    if phi.shape != (len(xs),) or psi.shape != (len(ys),):
        raise ValueError("dual vectors do not match the meshes")
    rows = []
    cols = []
    for start in range(0, len(xs), block_rows):
        stop = min(start + block_rows, len(xs))
        c_block = _pairwise_block(cost, xs[start:stop], ys)
        keep = phi[start:stop, None] + psi[None, :] >= c_block - threshold
        bi, bj = np.nonzero(keep)
        rows.append(bi + start)
        cols.append(bj)
    pairs = np.column_stack([np.concatenate(rows), np.concatenate(cols)])
    return ActiveSet(pairs)


def complete_feasible(active: ActiveSet, mu, nu) -> ActiveSet:
    """Active set enlarged by the support of the north-west-corner plan.

    The added pairs (at most M + N - 1 of them) guarantee that the reduced
    problem can route all mass regardless of what the activation predicted.
    """
    mu_w = mu.weights if isinstance(mu, DiscreteMeasure) else np.asarray(mu, dtype=float)
    nu_w = nu.weights if isinstance(nu, DiscreteMeasure) else np.asarray(nu, dtype=float)
    if abs(mu_w.sum() - nu_w.sum()) > 1e-12 * max(1.0, mu_w.sum()):
        raise ValueError("marginals are not balanced")
    ra = mu_w.copy()
    rb = nu_w.copy()
    m, n = len(ra), len(rb)
    tiny = 1e-15
    pairs = []
    i = j = 0
    while i < m and j < n:
        t = min(ra[i], rb[j])
        if t > 0.0:
            pairs.append((i, j))
            ra[i] -= t
            rb[j] -= t
        if ra[i] <= tiny:
            i += 1
        elif rb[j] <= tiny:
            j += 1
    if not pairs:
        return active
    return active.union(ActiveSet(np.asarray(pairs, dtype=np.int64)))


def check_optimality(phi, psi, cost, mesh_x: Mesh, mesh_y: Mesh,
                     tolerance: float, *,
                     block_rows: int = DEFAULT_BLOCK_ROWS) -> np.ndarray:
    """Pairs violating phi_i + psi_j <= c(x_i, y_j) + tolerance.

    Scans the full grid in row blocks; a small fixed slack absorbs the
    resolution of the solver duals.  Empty result certifies optimality of
    the reduced solution up to the tolerance.
    """
    if not tolerance >= 0.0:
        raise ValueError("optimality tolerance must be nonnegative")
    phi = np.asarray(phi, dtype=float)
    psi = np.asarray(psi, dtype=float)
    xs, ys = mesh_x.nodes, mesh_y.nodes
    if phi.shape != (len(xs),) or psi.shape != (len(ys),):
        raise ValueError("dual vectors do not match the meshes")
    cut = tolerance + DUAL_FEASIBILITY_SLACK
    rows = []
    cols = []
    for start in range(0, len(xs), block_rows):
        stop = min(start + block_rows, len(xs))
        c_block = _pairwise_block(cost, xs[start:stop], ys)
        bad = phi[start:stop, None] + psi[None, :] > c_block + cut
        bi, bj = np.nonzero(bad)
        rows.append(bi + start)
        cols.append(bj)
    return np.column_stack([np.concatenate(rows), np.concatenate(cols)])


def _tighten_zero_mass_duals(solution: TransportSolution, cost,
                             mesh_x: Mesh, mesh_y: Mesh, mu_w, nu_w,
                             block_rows: int) -> TransportSolution:
    """Replace duals of zero-mass atoms by their full-grid tight values.

    Zero-mass atoms impose no constraints on the reduced problem, so the
    solver only pins their duals against the active pairs.  Taking the
    pointwise minimum of c - dual over the whole opposite mesh keeps every
    invariant intact and stops the optimality check from flagging pairs at
    atoms that carry no mass anyway.
    """
    zero_rows = mu_w <= 0.0
    zero_cols = nu_w <= 0.0
    if not zero_rows.any() and not zero_cols.any():
        return solution
    phi = solution.phi.copy()
    psi = solution.psi.copy()
    xs, ys = mesh_x.nodes, mesh_y.nodes
    if zero_cols.any():
        pos = ~zero_rows
        best = np.full(len(ys), np.inf)
        xs_pos = xs[pos]
        phi_pos = phi[pos]
        for start in range(0, len(xs_pos), block_rows):
            stop = min(start + block_rows, len(xs_pos))
            c_block = _pairwise_block(cost, xs_pos[start:stop], ys)
            np.minimum(best, (c_block - phi_pos[start:stop, None]).min(axis=0),
                       out=best)
        psi[zero_cols] = best[zero_cols]
    if zero_rows.any():
        for start in range(0, len(xs), block_rows):
            stop = min(start + block_rows, len(xs))
            block_zero = zero_rows[start:stop]
            if not block_zero.any():
                continue
            c_block = _pairwise_block(cost, xs[start:stop][block_zero], ys)
            phi_block = (c_block - psi[None, :]).min(axis=1)
            idx = np.nonzero(zero_rows)[0]
            sel = idx[(idx >= start) & (idx < stop)]
            phi[sel] = phi_block
    return replace(solution, phi=phi, psi=psi)


def _run_level(mesh_x, mesh_y, mu, nu, cost, phi_tilde, psi_tilde, theta,
               c_opt, max_increases, block_rows, level):
    """Activation loop on one level; returns (solution, report, theta)."""
    h = max(mesh_x.h, mesh_y.h)
    started = time.perf_counter()
    increases = 0
    violation_counts: list[int] = []
    while True:
        active = build_active_set(
            phi_tilde, psi_tilde, cost, mesh_x, mesh_y, theta * h * h,
            block_rows=block_rows,
        )
        active = complete_feasible(active, mu, nu)
        costs = assemble(mesh_x, mesh_y, cost, active)
        sol = solve_reduced(costs, mu, nu, active)
        if sol.status != "optimal":
            raise DriverError(
                f"reduced problem infeasible on level {level} although the "
                "active set was feasibility-completed"
            )
        sol = _tighten_zero_mass_duals(
            sol, cost, mesh_x, mesh_y, mu.weights, nu.weights, block_rows
        )
        violations = check_optimality(
            sol.phi, sol.psi, cost, mesh_x, mesh_y, c_opt * h * h,
            block_rows=block_rows,
        )
        violation_counts.append(len(violations))
        if len(violations) == 0:
            report = LevelReport(
                level=level,
                m=mesh_x.num_nodes,
                n=mesh_y.num_nodes,
                active_cardinality=len(active),
                tolerance_increases=increases,
                objective=sol.objective * mu.mass,
                wall_time=time.perf_counter() - started,
                violation_counts=violation_counts,
            )
            return sol, report, theta
        increases += 1
        if increases > max_increases:
            raise DriverError(
                f"optimality check kept failing on level {level} after "
                f"{max_increases} tolerance increases "
                f"({len(violations)} violations at theta_act={theta})"
            )
        theta *= 2.0


def _tune_theta(mesh_x, mesh_y, mu, nu, cost, phi_tilde, psi_tilde, theta,
                c_opt, block_rows, max_halvings):
    """Halve theta while the coarsest level still passes its check."""
    h = max(mesh_x.h, mesh_y.h)
    for _ in range(max_halvings):
        trial = theta / 2.0
        active = build_active_set(
            phi_tilde, psi_tilde, cost, mesh_x, mesh_y, trial * h * h,
            block_rows=block_rows,
        )
        active = complete_feasible(active, mu, nu)
        costs = assemble(mesh_x, mesh_y, cost, active)
        sol = solve_reduced(costs, mu, nu, active)
        if sol.status != "optimal":
            break
        sol = _tighten_zero_mass_duals(
            sol, cost, mesh_x, mesh_y, mu.weights, nu.weights, block_rows
        )
        violations = check_optimality(
            sol.phi, sol.psi, cost, mesh_x, mesh_y, c_opt * h * h,
            block_rows=block_rows,
        )
        if len(violations) > 0:
            break
        theta = trial
    return theta


def multilevel_solve(problem, cost, params: MultilevelParams, *,
                     full_lp_cap: int = DEFAULT_FULL_LP_CAP):
    """Run the multilevel active-set iteration over the level range.

    ``problem`` provides domain_x, domain_y, density_f, density_g (the
    benchmark problems do).  Returns one (TransportSolution, LevelReport)
    pair per level, coarsest first.  Reported objectives are scaled by the
    quadrature mass of the first marginal so they refer to the original
    densities rather than their normalizations.
    """
    level = params.level_min
    mesh_x = build_mesh(problem.domain_x, level)
    mesh_y = build_mesh(problem.domain_y, level)
    mu = discretize_density(mesh_x, problem.density_f)
    nu = discretize_density(mesh_y, problem.density_g)
    theta = params.theta_act

    if params.coarse_init:
        init = solve_full(mesh_x, mesh_y, cost, mu, nu, cap=full_lp_cap)
        if init.status != "optimal":
            raise DriverError("full coarse-level solve failed")
        phi_tilde, psi_tilde = init.phi, init.psi
    else:
        phi_tilde = np.zeros(mesh_x.num_nodes)
        psi_tilde = np.zeros(mesh_y.num_nodes)

    if params.auto_tune_theta:
        theta = _tune_theta(
            mesh_x, mesh_y, mu, nu, cost, phi_tilde, psi_tilde, theta,
            params.c_opt, params.block_rows, params.auto_tune_max_halvings,
        )

    results = []
    while True:
        sol, report, theta = _run_level(
            mesh_x, mesh_y, mu, nu, cost, phi_tilde, psi_tilde, theta,
            params.c_opt, params.max_tolerance_increases, params.block_rows,
            level,
        )
        results.append((sol, report))
        if level == params.level_max:
            return results
        fine_x = refine(mesh_x)
        fine_y = refine(mesh_y)
        phi_tilde = prolongate(mesh_x, fine_x, sol.phi)
        psi_tilde = prolongate(mesh_y, fine_y, sol.psi)
        mesh_x, mesh_y = fine_x, fine_y
        mu = discretize_density(mesh_x, problem.density_f)
        nu = discretize_density(mesh_y, problem.density_g)
        theta /= 2.0
        level += 1
