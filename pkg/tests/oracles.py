"""Independent reference solvers used to cross-check the simplex engine.

Two routes: scipy's HiGHS LP solver on the dense transportation LP, and for
very small instances a literal enumeration of every spanning-tree basis of
the complete bipartite grid, keeping the best feasible one.  Both know
nothing about the package internals.
"""

import itertools

import numpy as np
import scipy.sparse as sp
from scipy.optimize import linprog


def lp_oracle(mu, nu, costs):
    """Dense transportation LP via linprog/HiGHS; returns the objective."""
    m, n = costs.shape
    rows = []
    cols = []
    for i in range(m):
        for j in range(n):
            rows.append(i)
            cols.append(i * n + j)
    for j in range(n):
        for i in range(m):
            rows.append(m + j)
            cols.append(i * n + j)
    data = np.ones(len(rows))
    a_eq = sp.csr_matrix((data, (rows, cols)), shape=(m + n, m * n))
    b_eq = np.concatenate([mu, nu])
    res = linprog(costs.ravel(), A_eq=a_eq, b_eq=b_eq,
                  bounds=(0, None), method="highs")
    assert res.status == 0, res.message
    return float(res.fun)


def _tree_flows(m, n, arcs, mu, nu):
    """Flows of a candidate basis, or None if the arcs are not a tree."""
    nn = m + n
    adj = [[] for _ in range(nn)]
    for k, (i, j) in enumerate(arcs):
        u, v = i, m + j
        adj[u].append((v, k))
        adj[v].append((u, k))
    seen = [False] * nn
    stack = [0]
    seen[0] = True
    count = 1
    while stack:
        u = stack.pop()
        for (v, _) in adj[u]:
            if not seen[v]:
                seen[v] = True
                count += 1
                stack.append(v)
    if count != nn:
        return None

    req = np.concatenate([mu, nu]).astype(float)
    deg = np.array([len(a) for a in adj])
    alive = [True] * len(arcs)
    flows = np.zeros(len(arcs))
    leaves = [u for u in range(nn) if deg[u] == 1]
    removed = [False] * nn
    while leaves:
        u = leaves.pop()
        if removed[u]:
            continue
        pick = None
        for (v, k) in adj[u]:
            if alive[k]:
                pick = (v, k)
                break
        if pick is None:
            removed[u] = True
            continue
        v, k = pick
        flows[k] = req[u]
        req[v] -= req[u]
        req[u] = 0.0
        alive[k] = False
        removed[u] = True
        deg[v] -= 1
        if deg[v] == 1:
            leaves.append(v)
    return flows


def enumerate_optimum(mu, nu, costs):
    """Best objective over every spanning-tree basis of the full grid.

    Exponential in m*n; callers keep m*n small.  All masses must be
    positive so each vertex of the feasible polytope is such a tree.
    """
    m, n = costs.shape
    pairs = [(i, j) for i in range(m) for j in range(n)]
    best = np.inf
    for combo in itertools.combinations(range(m * n), m + n - 1):
        arcs = [pairs[k] for k in combo]
        flows = _tree_flows(m, n, arcs, mu, nu)
        if flows is None:
            continue
        if flows.min() < -1e-12:
            continue
        obj = sum(f * costs[i, j]
                  for f, (i, j) in zip(flows, arcs) if f > 0.0)
        if obj < best:
            best = obj
    return best


def check_solution_certificates(mu, nu, costs, plan_indices, plan_values,
                                phi, psi, objective,
                                feas_tol=1e-9, gap_tol=1e-9, cs_tol=1e-9):
    """Marginal feasibility, dual feasibility, duality gap, slackness."""
    m, n = costs.shape
    dense = np.zeros((m, n))
    dense[plan_indices[:, 0], plan_indices[:, 1]] = plan_values
    assert plan_values.min() >= -feas_tol
    np.testing.assert_allclose(dense.sum(axis=1), mu, atol=feas_tol)
    np.testing.assert_allclose(dense.sum(axis=0), nu, atol=feas_tol)

    slack = costs - phi[:, None] - psi[None, :]
    assert slack.min() >= -feas_tol, f"dual infeasible by {-slack.min()}"
    dual_value = float(np.dot(phi, mu) + np.dot(psi, nu))
    assert abs(dual_value - objective) <= gap_tol, \
        f"duality gap {dual_value - objective}"
    on_support = slack[plan_indices[:, 0], plan_indices[:, 1]]
    assert np.abs(on_support * plan_values).max() <= cs_tol
