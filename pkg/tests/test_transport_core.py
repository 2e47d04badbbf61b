import numpy as np
import pytest

from otmas import (
    ActiveSet,
    CallableCost,
    FullProblemTooLarge,
    PolynomialCost,
    build_mesh,
    discretize_density,
    interval,
    rectangle,
    solve_full,
    solve_reduced,
)
from otmas.transport_core import assemble

from oracles import (
    check_solution_certificates,
    enumerate_optimum,
    lp_oracle,
)


def grid_points(values):
    return np.asarray(values, dtype=float).reshape(-1, 1)


def test_polynomial_cost_values():
    x = grid_points([0.0])
    y = grid_points([2.0])
    assert abs(PolynomialCost(2.0).pairwise(x, y)[0, 0] - 2.0) < 1e-15
    assert abs(PolynomialCost(1.0).pairwise(x, y)[0, 0] - 2.0) < 1e-15
    assert abs(PolynomialCost(3.0).pairwise(x, y)[0, 0] - 8.0 / 3.0) < 1e-15
    val = PolynomialCost(1.5).pairwise(x, y)[0, 0]
    assert abs(val - (2.0 / 3.0) * 2.0 ** 1.5) < 1e-14


def test_polynomial_cost_2d_distance():
    x = np.array([[0.0, 0.0]])
    y = np.array([[3.0, 4.0]])
    assert abs(PolynomialCost(2.0).pairwise(x, y)[0, 0] - 12.5) < 1e-15
    assert abs(PolynomialCost(1.0).pairwise(x, y)[0, 0] - 5.0) < 1e-15


def test_polynomial_cost_rejects_bad_exponent():
    with pytest.raises(ValueError):
        PolynomialCost(0.5)


def test_callable_cost_matches_polynomial():
    rng = np.random.default_rng(5)
    x = rng.normal(size=(4, 2))
    y = rng.normal(size=(6, 2))
    poly = PolynomialCost(2.0)
    wrapped = CallableCost(
        lambda a, b: 0.5 * float(np.sum((a - b) ** 2)))
    np.testing.assert_allclose(wrapped.pairwise(x, y), poly.pairwise(x, y),
                               atol=1e-14)


def test_active_set_dedup_and_order():
    a = ActiveSet(np.array([[1, 0], [0, 1], [1, 0], [0, 0]]))
    np.testing.assert_array_equal(a.pairs,
                                  [[0, 0], [0, 1], [1, 0]])
    assert len(a) == 3
    b = a.union(ActiveSet(np.array([[2, 2]])))
    assert len(b) == 4


def test_two_by_two_frozen_example():
    # worked by hand: mu=(0.3,0.7), nu=(0.6,0.4) on nodes {0,1}, p=2
    mu = np.array([0.3, 0.7])
    nu = np.array([0.6, 0.4])
    costs = np.array([0.0, 0.5, 0.5, 0.0])
    active = ActiveSet.full_grid(2, 2)
    sol = solve_reduced(costs, mu, nu, active)
    assert sol.status == "optimal"
    assert abs(sol.objective - 0.15) < 1e-15
    dense = sol.plan_dense(2, 2)
    np.testing.assert_allclose(dense, [[0.3, 0.0], [0.3, 0.4]], atol=1e-15)
    # duals gauged by psi at the first column atom
    shift = sol.psi[0]
    np.testing.assert_allclose(sol.phi + shift, [0.0, 0.5], atol=1e-15)
    np.testing.assert_allclose(sol.psi - shift, [0.0, -0.5], atol=1e-15)


def test_zero_mass_row_is_excluded_from_transport():
    mu = np.array([0.0, 1.0])
    nu = np.array([0.5, 0.5])
    costs = np.array([0.0, 0.5, 0.5, 0.0])
    sol = solve_reduced(costs, mu, nu, ActiveSet.full_grid(2, 2))
    assert abs(sol.objective - 0.25) < 1e-15
    assert (sol.plan_indices[:, 0] == 1).all()
    # the dead row still receives a dual value keeping feasibility
    slack = costs.reshape(2, 2) - sol.phi[:, None] - sol.psi[None, :]
    assert slack.min() > -1e-12


def test_single_atom_problem():
    sol = solve_reduced(np.array([3.0]), np.array([1.0]), np.array([1.0]),
                        ActiveSet(np.array([[0, 0]])))
    assert abs(sol.objective - 3.0) < 1e-15
    assert sol.support_size == 1


def test_infeasible_active_set_reported():
    # two sources, two sinks, but only one column reachable
    mu = np.array([0.5, 0.5])
    nu = np.array([0.4, 0.6])
    active = ActiveSet(np.array([[0, 0], [1, 0]]))
    sol = solve_reduced(np.array([1.0, 1.0]), mu, nu, active)
    assert sol.status == "infeasible"


def test_mass_mismatch_raises():
    with pytest.raises(ValueError):
        solve_reduced(np.array([1.0]), np.array([1.0]), np.array([0.5]),
                      ActiveSet(np.array([[0, 0]])))


def test_assemble_orders_costs_like_active_pairs():
    mx = build_mesh(interval(0.0, 1.0), 1)
    my = build_mesh(interval(0.0, 1.0), 1)
    active = ActiveSet(np.array([[0, 2], [2, 0], [1, 1]]))
    costs = assemble(mx, my, PolynomialCost(2.0), active)
    np.testing.assert_allclose(costs, [0.5, 0.0, 0.5])


def test_assemble_checks_bounds():
    mx = build_mesh(interval(0.0, 1.0), 1)
    with pytest.raises(ValueError):
        assemble(mx, mx, PolynomialCost(2.0),
                 ActiveSet(np.array([[0, 3]])))


def test_solve_full_equals_reduced_on_full_grid():
    mx = build_mesh(interval(0.0, 1.0), 2)
    my = build_mesh(interval(0.0, 1.0), 2)
    mu = discretize_density(mx, lambda p: (2.0 / 3.0) * (p[:, 0] + 1.0))
    nu = discretize_density(my, lambda p: np.ones(len(p)))
    cost = PolynomialCost(2.0)
    full = solve_full(mx, my, cost, mu, nu)
    active = ActiveSet.full_grid(mx.num_nodes, my.num_nodes)
    red = solve_reduced(assemble(mx, my, cost, active),
                        mu.weights, nu.weights, active)
    assert abs(full.objective - red.objective) < 1e-15


def test_solve_full_cap():
    mx = build_mesh(interval(0.0, 1.0), 5)
    mu = discretize_density(mx, lambda p: np.ones(len(p)))
    with pytest.raises(FullProblemTooLarge):
        solve_full(mx, mx, PolynomialCost(2.0), mu, mu, cap=100)


def random_instance(rng, m, n):
    mu = rng.uniform(0.1, 1.0, size=m)
    nu = rng.uniform(0.1, 1.0, size=n)
    mu /= mu.sum()
    nu /= nu.sum()
    costs = rng.uniform(0.0, 2.0, size=(m, n))
    return mu, nu, costs


def test_matches_enumeration_on_tiny_instances():
    # every spanning-tree basis enumerated; the strongest possible oracle
    rng = np.random.default_rng(11)
    shapes = [(2, 2), (2, 3), (3, 2), (3, 3), (2, 4), (3, 4), (4, 3), (2, 6)]
    for m, n in shapes:
        for _ in range(6):
            mu, nu, costs = random_instance(rng, m, n)
            active = ActiveSet.full_grid(m, n)
            sol = solve_reduced(costs.ravel(), mu, nu, active)
            ref = enumerate_optimum(mu, nu, costs)
            assert abs(sol.objective - ref) < 1e-10


def test_matches_lp_oracle_and_certificates():
    rng = np.random.default_rng(23)
    for trial in range(60):
        m = int(rng.integers(1, 7))
        n = int(rng.integers(1, 7))
        mu, nu, costs = random_instance(rng, m, n)
        active = ActiveSet.full_grid(m, n)
        sol = solve_reduced(costs.ravel(), mu, nu, active)
        ref = lp_oracle(mu, nu, costs)
        assert abs(sol.objective - ref) < 1e-10, (trial, m, n)
        check_solution_certificates(mu, nu, costs, sol.plan_indices,
                                    sol.plan_values, sol.phi, sol.psi,
                                    sol.objective)


def test_degenerate_masses_still_match_oracle():
    # equal masses force heavy degeneracy in the staircase start
    rng = np.random.default_rng(37)
    for _ in range(20):
        m = int(rng.integers(2, 7))
        n = int(rng.integers(2, 7))
        mu = np.full(m, 1.0 / m)
        nu = np.full(n, 1.0 / n)
        costs = rng.uniform(0.0, 1.0, size=(m, n))
        sol = solve_reduced(costs.ravel(), mu, nu,
                            ActiveSet.full_grid(m, n))
        assert abs(sol.objective - lp_oracle(mu, nu, costs)) < 1e-10


def test_cost_shift_leaves_support_unchanged():
    # adding a(x) + b(y) to the cost shifts duals but not the plan
    rng = np.random.default_rng(41)
    m, n = 5, 6
    mu, nu, costs = random_instance(rng, m, n)
    a = rng.normal(size=m)
    b = rng.normal(size=n)
    shifted = costs + a[:, None] + b[None, :]
    active = ActiveSet.full_grid(m, n)
    sol = solve_reduced(costs.ravel(), mu, nu, active)
    sol2 = solve_reduced(shifted.ravel(), mu, nu, active)
    np.testing.assert_allclose(sol.plan_dense(m, n), sol2.plan_dense(m, n),
                               atol=1e-12)
    expected = sol.objective + float(np.dot(a, mu) + np.dot(b, nu))
    assert abs(sol2.objective - expected) < 1e-12


def test_monotone_support_in_one_dimension():
    # strictly convex costs on the line give monotone optimal plans
    rng = np.random.default_rng(53)
    xs = np.sort(rng.uniform(0.0, 1.0, size=6))
    ys = np.sort(rng.uniform(0.0, 1.0, size=6))
    for p in (1.5, 2.0, 3.0):
        cost = PolynomialCost(p)
        costs = cost.pairwise(xs.reshape(-1, 1), ys.reshape(-1, 1))
        mu = rng.uniform(0.2, 1.0, size=6)
        nu = rng.uniform(0.2, 1.0, size=6)
        mu /= mu.sum()
        nu /= nu.sum()
        sol = solve_reduced(costs.ravel(), mu, nu,
                            ActiveSet.full_grid(6, 6))
        pairs = sol.plan_indices[np.lexsort((sol.plan_indices[:, 1],
                                             sol.plan_indices[:, 0]))]
        # no two support pairs may cross
        for k in range(len(pairs) - 1):
            i0, j0 = pairs[k]
            i1, j1 = pairs[k + 1]
            assert not (i1 > i0 and j1 < j0)
