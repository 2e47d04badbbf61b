"""Sparse transportation problems between two discrete measures.

The primal is  min sum c(x_i, y_j) pi_ij  over a prescribed pair set, with
row sums equal to the first marginal and column sums equal to the second.
Solutions carry the sparse plan together with the dual variables phi, psi
read off the spanning-tree basis; at optimality phi_i + psi_j <= c(x_i,y_j)
holds on the solved pair set with equality on the support.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .measure import DiscreteMeasure
from .mesh import Mesh
from . import network_simplex

DEFAULT_FULL_LP_CAP = 5_000_000

MASS_BALANCE_TOL = 1e-12


class FullProblemTooLarge(RuntimeError):
    pass


@dataclass(frozen=True)
class PolynomialCost:
    """c(x, y) = |x - y|**p / p for an exponent p >= 1."""

    p: float

    def __post_init__(self):
        if not self.p >= 1.0:
            raise ValueError(f"cost exponent must be >= 1, got {self.p}")

    def _from_square(self, d2: np.ndarray) -> np.ndarray:
        p = self.p
        if p == 2.0:
            return 0.5 * d2
        if p == 3.0:
            return (d2 * np.sqrt(d2)) / 3.0
        if p == 1.5:
            return (2.0 / 3.0) * d2**0.75
        return d2 ** (p / 2.0) / p

    def pairwise(self, x: np.ndarray, y: np.ndarray) -> np.ndarray:
        """Cost matrix between coordinate arrays (A, d) and (B, d)."""
        d2 = np.zeros((len(x), len(y)))
        for k in range(x.shape[1]):
            d2 += (x[:, k, None] - y[None, :, k]) ** 2
        return self._from_square(d2)

    def at_pairs(self, x: np.ndarray, y: np.ndarray) -> np.ndarray:
        """Row-wise cost of matched coordinate arrays of equal length."""
        d2 = ((x - y) ** 2).sum(axis=1)
        return self._from_square(d2)


@dataclass(frozen=True)
class CallableCost:
    """Adapter for a user-supplied pointwise cost c(x, y) -> float."""

    fn: object

    def pairwise(self, x, y):
        out = np.empty((len(x), len(y)))
        for i, xi in enumerate(x):
            for j, yj in enumerate(y):
                out[i, j] = self.fn(xi, yj)
        return out

    def at_pairs(self, x, y):
        return np.array([self.fn(xi, yj) for xi, yj in zip(x, y)])


class ActiveSet:
    """A duplicate-free, lexicographically sorted set of (i, j) pairs."""

    __slots__ = ("pairs",)

    def __init__(self, pairs):
        arr = np.asarray(pairs, dtype=np.int64)
        if arr.size == 0:
            arr = np.empty((0, 2), dtype=np.int64)
        if arr.ndim != 2 or arr.shape[1] != 2:
            raise ValueError("pairs must be an (K, 2) index array")
        if arr.size and arr.min() < 0:
            raise ValueError("pair indices must be nonnegative")
        arr = np.unique(arr, axis=0)
        arr.setflags(write=False)
        self.pairs = arr

    def __len__(self) -> int:
        return len(self.pairs)

    def __eq__(self, other) -> bool:
        return isinstance(other, ActiveSet) and np.array_equal(
            self.pairs, other.pairs
        )

    def union(self, other: "ActiveSet") -> "ActiveSet":
        return ActiveSet(np.concatenate([self.pairs, other.pairs]))

    @classmethod
    def full_grid(cls, m: int, n: int) -> "ActiveSet":
        ii, jj = np.meshgrid(np.arange(m), np.arange(n), indexing="ij")
        return cls(np.column_stack([ii.ravel(), jj.ravel()]))


@dataclass(frozen=True)
class TransportSolution:
    """Sparse plan with duals.  Fields are meaningful when status=optimal."""

    plan_indices: np.ndarray  # (S, 2) pair indices with positive mass
    plan_values: np.ndarray   # (S,) masses
    phi: np.ndarray           # (M,) row duals
    psi: np.ndarray           # (N,) column duals
    objective: float
    status: str               # "optimal" | "infeasible"

    @property
    def support_size(self) -> int:
        return len(self.plan_values)

    def plan_dense(self, m: int, n: int) -> np.ndarray:
        out = np.zeros((m, n))
        out[self.plan_indices[:, 0], self.plan_indices[:, 1]] = self.plan_values
        return out


def _weights(marginal) -> np.ndarray:
    if isinstance(marginal, DiscreteMeasure):
        return marginal.weights
    return np.asarray(marginal, dtype=float)


def assemble(mesh_x: Mesh, mesh_y: Mesh, cost, active: ActiveSet) -> np.ndarray:
    """Cost values for the active pairs, in active-set order."""
    if len(active) == 0:
        raise ValueError("active set is empty")
    pairs = active.pairs
    if pairs[:, 0].max() >= mesh_x.num_nodes or pairs[:, 1].max() >= mesh_y.num_nodes:
        raise ValueError("active pair indices exceed the mesh sizes")
    return np.asarray(
        cost.at_pairs(mesh_x.nodes[pairs[:, 0]], mesh_y.nodes[pairs[:, 1]]),
        dtype=float,
    )


def solve_reduced(costs, mu, nu, active: ActiveSet) -> TransportSolution:
    """Solve the transportation problem restricted to the active pairs.

    An active set that cannot route the mass yields status "infeasible"
    rather than an exception; unbalanced marginals raise.  Duals at
    zero-mass atoms are set to the tightest values supported by the active
    pairs so that dual feasibility holds on the whole pair set.
    """
    mu_w = _weights(mu)
    nu_w = _weights(nu)
    costs = np.asarray(costs, dtype=float)
    if len(costs) != len(active):
        raise ValueError("cost vector does not match the active set")
    if len(active) == 0:
        raise ValueError("active set is empty")
    pairs = active.pairs
    if pairs[:, 0].max() >= len(mu_w) or pairs[:, 1].max() >= len(nu_w):
        raise ValueError("active pair indices exceed the marginal sizes")

    flow, phi, psi, objective, status = network_simplex.solve_transportation(
        mu_w, nu_w, pairs[:, 0], pairs[:, 1], costs
    )
    phi, psi = _extend_duals(phi, psi, costs, pairs, mu_w, nu_w)

    pos = flow > 0.0
    return TransportSolution(
        plan_indices=pairs[pos],
        plan_values=flow[pos],
        phi=phi,
        psi=psi,
        objective=objective,
        status=status,
    )


def _extend_duals(phi, psi, costs, pairs, mu_w, nu_w):
    """Fill NaN duals of zero-mass atoms from the active pairs.

    Column duals first, using rows with known duals; then row duals against
    the completed columns.  Atoms without any usable pair default to zero.
    The order guarantees phi_i + psi_j <= c_ij for every active pair even
    when both endpoints carry no mass.
    """
    phi = phi.copy()
    psi = psi.copy()
    i_idx = pairs[:, 0]
    j_idx = pairs[:, 1]
    missing_psi = np.isnan(psi)
    if missing_psi.any():
        usable = ~np.isnan(phi[i_idx])
        best = np.full(len(psi), np.inf)
        np.minimum.at(
            best, j_idx[usable], costs[usable] - phi[i_idx[usable]]
        )
        fill = np.where(np.isfinite(best), best, 0.0)
        psi[missing_psi] = fill[missing_psi]
    missing_phi = np.isnan(phi)
    if missing_phi.any():
        best = np.full(len(phi), np.inf)
        np.minimum.at(best, i_idx, costs - psi[j_idx])
        fill = np.where(np.isfinite(best), best, 0.0)
        phi[missing_phi] = fill[missing_phi]
    return phi, psi


def solve_full(mesh_x: Mesh, mesh_y: Mesh, cost, mu, nu, *,
               cap: int = DEFAULT_FULL_LP_CAP) -> TransportSolution:
    """Solve on the complete pair grid; guarded by a size cap.

    Beyond the cap the dense pair set is not materialized and a
    FullProblemTooLarge error points at the multilevel driver instead.
    """
    m = mesh_x.num_nodes
    n = mesh_y.num_nodes
    if m * n > cap:
        raise FullProblemTooLarge(
            f"full pair grid has {m * n} entries, above the cap {cap}; "
            "use the multilevel active-set driver for problems of this size"
        )
    active = ActiveSet.full_grid(m, n)
    costs = assemble(mesh_x, mesh_y, cost, active)
    return solve_reduced(costs, mu, nu, active)
