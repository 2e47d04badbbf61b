"""Benchmark transport problems with known exact solutions.

Four problems are built in:

ex1   unit interval to unit interval, linear source density against a
      uniform target; the optimal map is a cubic gradient.
ex2   unit square pushed onto [0,2]x[0,3] by the gradient of
      x1^2 + x2^3, so the source density is 12*x2 (vanishing on an edge).
ex3   centered unit square onto itself with an oscillatory perturbation of
      the identity map built from a smooth windowed profile.
ex4   centered unit square split onto two side squares; the optimal map
      shifts each half horizontally by one unit.

For the quadratic cost the exact potential, transport map, dual multiplier
and optimal cost are recorded.  ``reference_cost`` supplies an extrapolated
reference when no exact value is available, and the multiplier error
helpers measure sup-norm dual errors after fixing the additive gauge.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .mesh import Domain, Mesh, interval, nested_indices, rectangle

_PI = np.pi


@dataclass(frozen=True)
class ExactSolution:
    potential: Callable
    transport_map: Callable
    multiplier: Callable
    optimal_cost_p2: float | None


@dataclass(frozen=True)
class Problem:
    name: str
    domain_x: Domain
    domain_y: Domain
    density_f: Callable
    density_g: Callable
    exact: ExactSolution | None


def oscillating_profile(z):
    """Windowed oscillation used by ex3, with first and second derivatives.

    The profile and its first derivative vanish at z = +-1/2, so the
    perturbed map keeps the square inside itself.  The first derivative has
    the closed form (z^2 - 1/4) * sin(8 pi z).
    """
    z = np.asarray(z, dtype=float)
    c0 = 1.0 / (256.0 * _PI**3) + 1.0 / (32.0 * _PI)
    amp = -(z**2) / (8.0 * _PI) + c0
    s = np.sin(8.0 * _PI * z)
    c = np.cos(8.0 * _PI * z)
    q = amp * c + z * s / (32.0 * _PI**2)
    dq = (z**2 - 0.25) * s
    ddq = 2.0 * z * s + 8.0 * _PI * (z**2 - 0.25) * c
    return q, dq, ddq


def _gauss_grid_2d(lower, upper, n):
    """Tensor Gauss-Legendre points and weights on a rectangle."""
    t, w = np.polynomial.legendre.leggauss(n)
    pts = []
    wts = []
    for (lo, up) in zip(lower, upper):
        pts.append(0.5 * (up - lo) * t + 0.5 * (up + lo))
        wts.append(0.5 * (up - lo) * w)
    gx, gy = np.meshgrid(pts[0], pts[1])
    wx, wy = np.meshgrid(wts[0], wts[1])
    nodes = np.column_stack([gx.ravel(), gy.ravel()])
    return nodes, (wx * wy).ravel()


def _ex3_parts(points):
    q1, dq1, ddq1 = oscillating_profile(points[..., 0])
    q2, dq2, ddq2 = oscillating_profile(points[..., 1])
    return q1, dq1, ddq1, q2, dq2, ddq2


def _ex3_density(points):
    q1, dq1, ddq1, q2, dq2, ddq2 = _ex3_parts(points)
    return (
        1.0
        + 4.0 * (ddq1 * q2 + q1 * ddq2)
        + 16.0 * (q1 * q2 * ddq1 * ddq2 - dq1**2 * dq2**2)
    )


def _ex3_exact_cost() -> float:
    # displacement of the exact map is 4*(q'(x1)q(x2), q(x1)q'(x2));
    # integrate half its squared norm against the source density
    nodes, weights = _gauss_grid_2d((-0.5, -0.5), (0.5, 0.5), 240)
    q1, dq1, _, q2, dq2, _ = _ex3_parts(nodes)
    disp_sq = 16.0 * (dq1**2 * q2**2 + q1**2 * dq2**2)
    return float(np.sum(weights * 0.5 * disp_sq * _ex3_density(nodes)))


def make_problem(name: str) -> Problem:
    """Build one of the benchmark problems: ex1, ex2, ex3 or ex4."""
    if name == "ex1":
        return Problem(
            name=name,
            domain_x=interval(0.0, 1.0),
            domain_y=interval(0.0, 1.0),
            density_f=lambda p: (2.0 / 3.0) * (p[:, 0] + 1.0),
            density_g=lambda p: np.ones(len(p)),
            exact=ExactSolution(
                potential=lambda p: p[:, 0] ** 3 / 9.0 + p[:, 0] ** 2 / 3.0,
                transport_map=lambda p: (p[:, 0] ** 2 / 3.0
                                         + 2.0 * p[:, 0] / 3.0)[:, None],
                multiplier=lambda p: p[:, 0] ** 2 / 6.0 - p[:, 0] ** 3 / 9.0,
                optimal_cost_p2=1.0 / 540.0,
            ),
        )
    if name == "ex2":
        return Problem(
            name=name,
            domain_x=rectangle((0.0, 0.0), (1.0, 1.0)),
            domain_y=rectangle((0.0, 0.0), (2.0, 3.0)),
            density_f=lambda p: 12.0 * p[:, 1],
            density_g=lambda p: np.ones(len(p)),
            exact=ExactSolution(
                potential=lambda p: p[:, 0] ** 2 + p[:, 1] ** 3,
                transport_map=lambda p: np.column_stack(
                    [2.0 * p[:, 0], 3.0 * p[:, 1] ** 2]
                ),
                multiplier=lambda p: (
                    0.5 * (p[:, 0] ** 2 + p[:, 1] ** 2)
                    - p[:, 0] ** 2 - p[:, 1] ** 3
                ),
                optimal_cost_p2=43.0 / 10.0,
            ),
        )
    if name == "ex3":
        square = rectangle((-0.5, -0.5), (0.5, 0.5))

        def potential(p):
            q1, _, _, q2, _, _ = _ex3_parts(p)
            return 0.5 * (p[:, 0] ** 2 + p[:, 1] ** 2) + 4.0 * q1 * q2

        def transport_map(p):
            q1, dq1, _, q2, dq2, _ = _ex3_parts(p)
            return p + 4.0 * np.column_stack([dq1 * q2, q1 * dq2])

        def multiplier(p):
            q1, _, _, q2, _, _ = _ex3_parts(p)
            return -4.0 * q1 * q2

        return Problem(
            name=name,
            domain_x=square,
            domain_y=square,
            density_f=_ex3_density,
            density_g=lambda p: np.ones(len(p)),
            exact=ExactSolution(
                potential=potential,
                transport_map=transport_map,
                multiplier=multiplier,
                optimal_cost_p2=_ex3_exact_cost(),
            ),
        )
    if name == "ex4":
        domain_y = Domain(
            2,
            (
                ((-1.5, -0.5), (-1.0, 0.5)),
                ((1.0, -0.5), (1.5, 0.5)),
            ),
        )
        return Problem(
            name=name,
            domain_x=rectangle((-0.5, -0.5), (0.5, 0.5)),
            domain_y=domain_y,
            density_f=lambda p: np.ones(len(p)),
            density_g=lambda p: np.ones(len(p)),
            exact=ExactSolution(
                potential=lambda p: 0.5 * (p[:, 0] ** 2 + p[:, 1] ** 2)
                + np.abs(p[:, 0]),
                transport_map=lambda p: np.column_stack(
                    [p[:, 0] + np.where(p[:, 0] >= 0.0, 1.0, -1.0), p[:, 1]]
                ),
                multiplier=lambda p: -np.abs(p[:, 0]),
                optimal_cost_p2=0.5,
            ),
        )
    raise ValueError(f"unknown problem {name!r}; expected ex1 .. ex4")


def reference_cost(objectives) -> float:
    """Extrapolated reference from the two finest computed objectives.

    Assumes second-order convergence, i.e. the error shrinks by four per
    level: ref = I_fine + (I_fine - I_coarse) / 3.
    """
    objectives = [float(v) for v in objectives]
    if len(objectives) < 2:
        raise ValueError("need at least two objectives to extrapolate")
    coarse, fine = objectives[-2], objectives[-1]
    return fine + (fine - coarse) / 3.0


def _chebyshev_gauge_error(residual: np.ndarray) -> float:
    # the optimal additive shift centers the residual range
    return float((residual.max() - residual.min()) / 2.0)


def multiplier_error(solution, problem: Problem, mesh_x: Mesh) -> float:
    """Sup-norm distance of the row duals to the exact multiplier, after
    removing the optimal additive constant."""
    if problem.exact is None:
        raise ValueError(f"problem {problem.name} records no exact solution")
    exact = np.asarray(problem.exact.multiplier(mesh_x.nodes), dtype=float)
    return _chebyshev_gauge_error(exact - solution.phi)


def multiplier_difference_error(coarse_solution, fine_solution,
                                coarse_mesh: Mesh, fine_mesh: Mesh) -> float:
    """Gauge-corrected sup-norm difference of duals across one refinement.

    Used in place of ``multiplier_error`` when no exact multiplier is
    known; the fine duals are restricted to the coarse nodes.
    """
    idx = nested_indices(coarse_mesh, fine_mesh)
    residual = fine_solution.phi[idx] - coarse_solution.phi
    return _chebyshev_gauge_error(residual)
