"""Discrete measures obtained from densities by the vertex quadrature rule.

A density is sampled at the mesh nodes and weighted with the hat-function
integrals, which is the adjoint of nodal interpolation: pairing the discrete
measure with a nodal function reproduces the vertex-rule quadrature of
density * function.  Weights are normalized to unit total mass because the
transportation solver requires exactly balanced marginals; the pre-
normalization total is kept so objectives can be reported in the original
units of the density.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .mesh import Mesh, evaluate_nodal

# nodal density values in [NEGATIVE_DENSITY_TOL, 0) are clamped to zero,
# anything below is rejected
NEGATIVE_DENSITY_TOL = -1e-12


class InvalidDensityError(ValueError):
    pass


@dataclass(frozen=True)
class DiscreteMeasure:
    """Nonnegative weights on the nodes of a mesh, summing to one.

    ``mass`` is the total the weights carried before normalization, i.e. the
    vertex-rule approximation of the density integral.
    """

    mesh: Mesh
    weights: np.ndarray
    mass: float = 1.0

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=float)
        if w.shape != (self.mesh.num_nodes,):
            raise ValueError("weight vector does not match the mesh")
        if w.min(initial=0.0) < 0.0:
            raise ValueError("weights must be nonnegative")
        if abs(w.sum() - 1.0) > 1e-14:
            raise ValueError("weights must sum to one")
        w.setflags(write=False)
        object.__setattr__(self, "weights", w)

    def __len__(self) -> int:
        return len(self.weights)


def discretize_density(mesh: Mesh, density) -> DiscreteMeasure:
    """Sample ``density`` at the nodes, weight by hat integrals, normalize.

    Raises InvalidDensityError when the density is negative at a node beyond
    roundoff, or carries no positive mass at all.
    """
    vals = evaluate_nodal(density, mesh.nodes)
    if vals.min(initial=0.0) < NEGATIVE_DENSITY_TOL:
        raise InvalidDensityError(
            f"invalid density: negative value {vals.min()} at a mesh node"
        )
    vals = np.clip(vals, 0.0, None)
    raw = mesh.hat_integrals * vals
    total = float(raw.sum())
    if total <= 0.0:
        raise InvalidDensityError("invalid density: no positive mass")
    w = raw / total
    w = w / w.sum()  # second pass pins the float sum to one
    return DiscreteMeasure(mesh=mesh, weights=w, mass=total)


def pair(measure: DiscreteMeasure, u) -> float:
    """Duality pairing: sum of weights times nodal values of ``u``.

    ``u`` is a function of node coordinates, or directly a vector of
    nodal values.
    """
    if callable(u):
        vals = evaluate_nodal(u, measure.mesh.nodes)
    else:
        vals = np.asarray(u, dtype=float)
        if vals.shape != (len(measure.weights),):
            raise ValueError("nodal value vector does not match the mesh")
    return float(np.dot(measure.weights, vals))
