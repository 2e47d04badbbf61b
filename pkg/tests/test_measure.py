import numpy as np
import pytest

from otmas import (
    DiscreteMeasure,
    InvalidDensityError,
    build_mesh,
    discretize_density,
    interval,
    pair,
    rectangle,
    refine,
)


def test_weights_on_unit_interval_level_one():
    mesh = build_mesh(interval(0.0, 1.0), 1)
    mu = discretize_density(mesh, lambda p: (2.0 / 3.0) * (p[:, 0] + 1.0))
    # beta * f at (0, 1/2, 3/2)/... -> (1/6, 1/2, 1/3) after normalization
    np.testing.assert_allclose(mu.weights, [1.0 / 6.0, 0.5, 1.0 / 3.0],
                               atol=1e-15)
    assert abs(mu.weights.sum() - 1.0) < 1e-14
    assert abs(mu.mass - 1.0) < 1e-14


def test_uniform_density_recovers_hat_integrals():
    mesh = build_mesh(rectangle((0.0, 0.0), (2.0, 3.0)), 2)
    nu = discretize_density(mesh, lambda p: np.ones(len(p)))
    np.testing.assert_allclose(
        nu.weights, mesh.hat_integrals / mesh.hat_integrals.sum(),
        atol=1e-15)
    assert abs(nu.mass - 6.0) < 1e-13


def test_affine_density_mass_is_exact():
    # vertex quadrature integrates affine densities exactly
    mesh = build_mesh(rectangle((0.0, 0.0), (1.0, 1.0)), 3)
    mu = discretize_density(mesh, lambda p: 12.0 * p[:, 1])
    assert abs(mu.mass - 6.0) < 1e-12


def test_pairing_examples():
    mesh = build_mesh(interval(0.0, 1.0), 1)
    mu = discretize_density(mesh, lambda p: np.ones(len(p)))
    # \int x dx against the uniform measure via nodal quadrature
    assert abs(pair(mu, lambda p: p[:, 0]) - 0.5) < 1e-15
    nu = discretize_density(mesh, lambda p: (2.0 / 3.0) * (p[:, 0] + 1.0))
    assert abs(pair(nu, lambda p: p[:, 0]) - 7.0 / 12.0) < 1e-15


def test_pairing_accepts_precomputed_values():
    mesh = build_mesh(interval(0.0, 1.0), 2)
    mu = discretize_density(mesh, lambda p: np.ones(len(p)))
    values = mesh.nodes[:, 0] ** 2
    assert abs(pair(mu, values) - pair(mu, lambda p: p[:, 0] ** 2)) < 1e-15


def test_adjoint_identity():
    # pairing the discretized measure with g equals the quadrature sum
    # of f*g over nodes, for any nodal g
    rng = np.random.default_rng(3)
    mesh = build_mesh(rectangle((0.0, 0.0), (1.0, 1.0)), 3)
    f = lambda p: 1.0 + p[:, 0] * p[:, 1]
    mu = discretize_density(mesh, f)
    for _ in range(5):
        g = rng.normal(size=mesh.num_nodes)
        direct = float(np.dot(mesh.hat_integrals * f(mesh.nodes), g))
        assert abs(pair(mu, g) * mu.mass - direct) < 1e-12


def test_tiny_negative_density_is_clamped():
    mesh = build_mesh(interval(0.0, 1.0), 2)

    def f(p):
        vals = p[:, 0].copy()
        vals[0] = -1e-13
        return vals

    mu = discretize_density(mesh, f)
    assert mu.weights[0] == 0.0
    assert mu.weights.min() >= 0.0


def test_genuinely_negative_density_raises():
    mesh = build_mesh(interval(0.0, 1.0), 2)
    with pytest.raises(InvalidDensityError):
        discretize_density(mesh, lambda p: p[:, 0] - 0.5)


def test_zero_density_raises():
    mesh = build_mesh(interval(0.0, 1.0), 2)
    with pytest.raises(InvalidDensityError):
        discretize_density(mesh, lambda p: np.zeros(len(p)))


def test_measure_validation():
    mesh = build_mesh(interval(0.0, 1.0), 1)
    with pytest.raises(ValueError):
        DiscreteMeasure(mesh, np.array([0.5, 0.5]))  # wrong length
    with pytest.raises(ValueError):
        DiscreteMeasure(mesh, np.array([0.7, 0.5, 0.3]))  # sum != 1
    with pytest.raises(ValueError):
        DiscreteMeasure(mesh, np.array([-0.2, 0.7, 0.5]))


def test_refinement_consistency_second_order():
    # nodal quadrature of a smooth density converges at order two, so the
    # discrete mass settles down at that rate
    mesh = build_mesh(interval(0.0, 1.0), 2)
    f = lambda p: 1.0 + np.sin(3.0 * p[:, 0]) ** 2
    masses = []
    for _ in range(5):
        masses.append(discretize_density(mesh, f).mass)
        mesh = refine(mesh)
    errs = np.abs(np.diff(masses))
    orders = np.log2(errs[:-1] / errs[1:])
    assert orders[-1] > 1.8
