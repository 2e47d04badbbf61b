"""Transportation network simplex on a spanning-tree basis.

Solves  min sum c_a x_a  over arcs a = (row, col) of a bipartite arc list,
subject to row sums = mu, column sums = nu, x >= 0.  The basis is a spanning
tree of the bipartite graph; dual variables fall out of the tree equations
phi_row + psi_col = c_arc with psi pinned to zero at the tree root (the
first column atom in the network).

Pivoting uses the most-negative reduced cost rule and falls back to Bland's
rule after a run of degenerate pivots, which guarantees termination.  The
initial basis is the degenerate north-west-corner staircase over the atoms
with positive mass; staircase arcs missing from the arc list are inserted as
artificial arcs with a large cost and must carry no flow at the end,
otherwise the instance is reported infeasible.

The pivot loop is compiled with numba: per pivot it updates flows along the
tree cycle, re-hangs the subtree under the leaving arc, shifts its dual
potentials by the entering reduced cost, and refreshes reduced costs of the
arcs touching that subtree through a CSR incidence table.
"""

from __future__ import annotations

import numpy as np
from numba import njit

REDUCED_COST_TOL = 1e-10
PRIMAL_FEAS_TOL = 1e-12
STALL_FACTOR = 50
# artificial arcs get cost (1 + max |c|), escalated when they refuse to
# leave although the instance might still be feasible
BIG_M_ESCALATIONS = 3
BIG_M_GROWTH = 1024.0
MAX_PIVOTS = 5_000_000

_STATUS_OPTIMAL = 0
_STATUS_INFEASIBLE = 1
_STATUS_STUCK = 2


def _northwest_staircase(a: np.ndarray, b: np.ndarray):
    """Degenerate north-west corner rule on positive masses.

    Returns exactly len(a)+len(b)-1 triples (i, j, flow) forming a spanning
    tree: at an exact tie the rule still advances only one index, recording
    a zero-flow arc on the next step.
    """
    m, n = len(a), len(b)
    ra = a.copy()
    rb = b.copy()
    arcs = []
    i = j = 0
    while True:
        t = min(ra[i], rb[j])
        if t < 0.0:
            t = 0.0
        arcs.append((i, j, t))
        ra[i] -= t
        rb[j] -= t
        if i == m - 1 and j == n - 1:
            break
        if ra[i] <= rb[j] and i < m - 1:
            i += 1
        else:
            j += 1
    return arcs


@njit(cache=True)
def _attach(p, c, first_child, next_sib, prev_sib):
    nx = first_child[p]
    next_sib[c] = nx
    prev_sib[c] = -1
    if nx != -1:
        prev_sib[nx] = c
    first_child[p] = c


@njit(cache=True)
def _detach(c, parent, first_child, next_sib, prev_sib):
    p = parent[c]
    pr = prev_sib[c]
    nx = next_sib[c]
    if pr == -1:
        first_child[p] = nx
    else:
        next_sib[pr] = nx
    if nx != -1:
        prev_sib[nx] = pr


@njit(cache=True)
def _refresh_potentials(root, pot, cost, parent, pred_arc,
                        first_child, next_sib, stack):
    pot[root] = 0.0
    sp = 0
    stack[sp] = root
    sp += 1
    while sp > 0:
        sp -= 1
        x = stack[sp]
        ch = first_child[x]
        while ch != -1:
            pot[ch] = cost[pred_arc[ch]] - pot[x]
            stack[sp] = ch
            sp += 1
            ch = next_sib[ch]


@njit(cache=True)
def _simplex_kernel(m, num_real, arc_u, arc_v, cost, flow, red, pot,
                    parent, pred_arc, depth, first_child, next_sib, prev_sib,
                    row_ptr, row_ids, col_ptr, col_ids, artificial_ids,
                    rc_tol, feas_tol, stall_limit, max_pivots,
                    big_growth, max_escalations):
    nn = len(pot)
    root = m
    stack = np.empty(nn, np.int64)
    sub = np.empty(nn, np.int64)
    path_u = np.empty(nn, np.int64)
    path_v = np.empty(nn, np.int64)
    marks = np.zeros(nn, np.bool_)
    escalations = 0
    stall = 0
    bland = False
    pivots = 0
    while True:
        # ---- pricing ----
        e = -1
        if bland:
            for a in range(num_real):
                if red[a] < -rc_tol:
                    e = a
                    break
        else:
            best = -rc_tol
            for a in range(num_real):
                if red[a] < best:
                    best = red[a]
                    e = a
        if e < 0:
            maxart = 0.0
            for k in range(len(artificial_ids)):
                f = flow[artificial_ids[k]]
                if f > maxart:
                    maxart = f
            if maxart > feas_tol:
                if escalations < max_escalations:
                    escalations += 1
                    for k in range(len(artificial_ids)):
                        cost[artificial_ids[k]] *= big_growth
                    _refresh_potentials(root, pot, cost, parent, pred_arc,
                                        first_child, next_sib, stack)
                    for a in range(num_real):
                        red[a] = cost[a] - pot[arc_u[a]] - pot[arc_v[a]]
                    stall = 0
                    bland = False
                    continue
                _refresh_potentials(root, pot, cost, parent, pred_arc,
                                    first_child, next_sib, stack)
                return _STATUS_INFEASIBLE
            _refresh_potentials(root, pot, cost, parent, pred_arc,
                                first_child, next_sib, stack)
            return _STATUS_OPTIMAL

        pivots += 1
        if pivots > max_pivots:
            return _STATUS_STUCK

        u0 = arc_u[e]
        v0 = arc_v[e]
        r_e = red[e]

        # tree path between the endpoints; climbing lists hold arc ids
        nu_ = 0
        nv_ = 0
        x = u0
        y = v0
        while depth[x] > depth[y]:
            path_u[nu_] = pred_arc[x]
            nu_ += 1
            x = parent[x]
        while depth[y] > depth[x]:
            path_v[nv_] = pred_arc[y]
            nv_ += 1
            y = parent[y]
        while x != y:
            path_u[nu_] = pred_arc[x]
            nu_ += 1
            x = parent[x]
            path_v[nv_] = pred_arc[y]
            nv_ += 1
            y = parent[y]

        # arcs at even positions (seen from either endpoint) lose flow;
        # leaving-arc ties resolve to the smallest arc id
        t = np.inf
        leave = -1
        for k in range(0, nu_, 2):
            f = flow[path_u[k]]
            if f < t or (f == t and path_u[k] < leave):
                t = f
                leave = path_u[k]
        for k in range(0, nv_, 2):
            f = flow[path_v[k]]
            if f < t or (f == t and path_v[k] < leave):
                t = f
                leave = path_v[k]

        degenerate = t <= 1e-15
        if t > 0.0:
            flow[e] += t
            for k in range(nu_):
                aid = path_u[k]
                if k % 2 == 0:
                    nf = flow[aid] - t
                    flow[aid] = nf if nf > 0.0 else 0.0
                else:
                    flow[aid] += t
            for k in range(nv_):
                aid = path_v[k]
                if k % 2 == 0:
                    nf = flow[aid] - t
                    flow[aid] = nf if nf > 0.0 else 0.0
                else:
                    flow[aid] += t
        flow[leave] = 0.0

        # cut the leaving arc; lc is its deeper endpoint
        lu = arc_u[leave]
        lv = arc_v[leave]
        if pred_arc[lu] == leave:
            lc = lu
        else:
            lc = lv
        _detach(lc, parent, first_child, next_sib, prev_sib)
        parent[lc] = -1
        pred_arc[lc] = -1

        # collect the subtree hanging below the cut
        ns = 0
        sp = 0
        stack[sp] = lc
        sp += 1
        while sp > 0:
            sp -= 1
            xx = stack[sp]
            sub[ns] = xx
            ns += 1
            marks[xx] = True
            ch = first_child[xx]
            while ch != -1:
                stack[sp] = ch
                sp += 1
                ch = next_sib[ch]

        if marks[u0]:
            u_in = u0
            u_out = v0
        else:
            u_in = v0
            u_out = u0

        # potentials of the cut side shift by +-r_e depending on the
        # bipartite class relative to the re-entry endpoint
        in_is_row = u_in < m
        for k in range(ns):
            v = sub[k]
            if (v < m) == in_is_row:
                pot[v] += r_e
            else:
                pot[v] -= r_e

        # re-root the subtree at u_in and hang it on u_out via arc e
        cn = 0
        xx = u_in
        while True:
            stack[cn] = xx
            cn += 1
            if xx == lc:
                break
            path_u[cn - 1] = pred_arc[xx]
            xx = parent[xx]
        for k in range(cn - 1):
            _detach(stack[k], parent, first_child, next_sib, prev_sib)
        parent[u_in] = u_out
        pred_arc[u_in] = e
        _attach(u_out, u_in, first_child, next_sib, prev_sib)
        for k in range(cn - 1):
            child = stack[k + 1]
            par = stack[k]
            parent[child] = par
            pred_arc[child] = path_u[k]
            _attach(par, child, first_child, next_sib, prev_sib)

        # depths change across the whole subtree
        depth[u_in] = depth[u_out] + 1
        sp = 0
        stack[sp] = u_in
        sp += 1
        while sp > 0:
            sp -= 1
            xx = stack[sp]
            d = depth[xx] + 1
            ch = first_child[xx]
            while ch != -1:
                depth[ch] = d
                stack[sp] = ch
                sp += 1
                ch = next_sib[ch]

        # refresh reduced costs of real arcs touching the shifted subtree
        for k in range(ns):
            v = sub[k]
            if v < m:
                for q in range(row_ptr[v], row_ptr[v + 1]):
                    aid = row_ids[q]
                    red[aid] = (cost[aid] - pot[arc_u[aid]]
                                - pot[arc_v[aid]])
            else:
                vc = v - m
                for q in range(col_ptr[vc], col_ptr[vc + 1]):
                    aid = col_ids[q]
                    red[aid] = (cost[aid] - pot[arc_u[aid]]
                                - pot[arc_v[aid]])
            marks[v] = False

        if degenerate:
            stall += 1
            if stall >= stall_limit:
                bland = True
        else:
            stall = 0
            bland = False


def _csr_incidence(endpoint: np.ndarray, num_nodes: int):
    order = np.argsort(endpoint, kind="stable").astype(np.int64)
    counts = np.bincount(endpoint, minlength=num_nodes)
    ptr = np.concatenate([[0], np.cumsum(counts)]).astype(np.int64)
    return ptr, order


def solve_transportation(
    mu: np.ndarray,
    nu: np.ndarray,
    arc_rows: np.ndarray,
    arc_cols: np.ndarray,
    arc_costs: np.ndarray,
    *,
    reduced_cost_tol: float = REDUCED_COST_TOL,
    feas_tol: float = PRIMAL_FEAS_TOL,
    stall_factor: int = STALL_FACTOR,
):
    """Solve the sparse transportation problem.

    Returns (flow, phi, psi, objective, status) where flow aligns with the
    input arc list and phi/psi carry NaN at zero-mass atoms (callers decide
    how to extend duals there).  status is "optimal" or "infeasible".
    """
    mu = np.asarray(mu, dtype=float)
    nu = np.asarray(nu, dtype=float)
    if abs(mu.sum() - nu.sum()) > 1e-12 * max(1.0, mu.sum(), nu.sum()):
        raise ValueError(
            f"mass mismatch: sum mu = {mu.sum()!r}, sum nu = {nu.sum()!r}"
        )

    alive_r = np.nonzero(mu > 0.0)[0]
    alive_c = np.nonzero(nu > 0.0)[0]
    phi = np.full(len(mu), np.nan)
    psi = np.full(len(nu), np.nan)
    flow_out = np.zeros(len(arc_rows))

    if len(alive_r) == 0:  # empty problem: nothing to transport
        return flow_out, phi, psi, 0.0, "optimal"

    # compact alive atoms; arcs touching a zero-mass atom can carry no flow
    rslot = np.full(len(mu), -1, dtype=np.int64)
    cslot = np.full(len(nu), -1, dtype=np.int64)
    rslot[alive_r] = np.arange(len(alive_r))
    cslot[alive_c] = np.arange(len(alive_c))
    keep = (rslot[arc_rows] >= 0) & (cslot[arc_cols] >= 0)
    kept_ids = np.nonzero(keep)[0]
    au = rslot[arc_rows[kept_ids]]
    av = cslot[arc_cols[kept_ids]]
    ac = np.asarray(arc_costs, dtype=float)[kept_ids]

    m, n = len(alive_r), len(alive_c)
    flow, pot, objective, status = _solve_compacted(
        mu[alive_r], nu[alive_c], au, av, ac,
        reduced_cost_tol=reduced_cost_tol,
        feas_tol=feas_tol,
        stall_factor=stall_factor,
    )

    flow_out[kept_ids] = flow[: len(ac)]
    phi[alive_r] = pot[:m]
    psi[alive_c] = pot[m : m + n]
    return flow_out, phi, psi, objective, status


def _solve_compacted(a, b, au, av, ac, *, reduced_cost_tol, feas_tol,
                     stall_factor):
    """Set up arrays for the kernel and run it on all-positive-mass atoms."""
    m = len(a)
    n = len(b)
    nn = m + n
    num_real = len(ac)

    # duplicate (row, col) arcs would break basis bookkeeping
    key = au.astype(np.int64) * n + av
    if len(np.unique(key)) != len(key):
        raise ValueError("duplicate arcs in the active set")
    pair_lookup = {}
    for idx, k in enumerate(key):
        pair_lookup[int(k)] = idx

    staircase = _northwest_staircase(a, b)
    big = 1.0 + float(np.max(np.abs(ac))) if len(ac) else 1.0

    # arc arrays: real arcs first, artificial staircase completions after
    art_u, art_v, art_flow, art_ids = [], [], [], []
    basis_arcs = []
    flow_real = np.zeros(num_real)
    for (i, j, t) in staircase:
        hit = pair_lookup.get(i * n + j)
        if hit is not None:
            flow_real[hit] = t
            basis_arcs.append(hit)
        else:
            art_ids.append(num_real + len(art_u))
            art_u.append(i)
            art_v.append(j)
            art_flow.append(t)
            basis_arcs.append(art_ids[-1])
    arc_u = np.concatenate([au, np.asarray(art_u, dtype=np.int64)])
    arc_v = np.concatenate([av, np.asarray(art_v, dtype=np.int64)]) + m
    cost = np.concatenate([ac, np.full(len(art_u), big)])
    flow = np.concatenate([flow_real, np.asarray(art_flow, dtype=float)])
    artificial_ids = np.asarray(art_ids, dtype=np.int64)

    # spanning tree state; root is the first column atom, psi(root) = 0
    root = m
    parent = np.full(nn, -1, dtype=np.int64)
    pred_arc = np.full(nn, -1, dtype=np.int64)
    depth = np.zeros(nn, dtype=np.int64)
    first_child = np.full(nn, -1, dtype=np.int64)
    next_sib = np.full(nn, -1, dtype=np.int64)
    prev_sib = np.full(nn, -1, dtype=np.int64)
    pot = np.zeros(nn)

    adj_head = np.full(nn, -1, dtype=np.int64)
    adj_next = np.full(2 * len(basis_arcs), -1, dtype=np.int64)
    adj_node = np.empty(2 * len(basis_arcs), dtype=np.int64)
    adj_arc = np.empty(2 * len(basis_arcs), dtype=np.int64)
    slot = 0
    for aid in basis_arcs:
        u = int(arc_u[aid])
        v = int(arc_v[aid])
        for (s, o) in ((u, v), (v, u)):
            adj_node[slot] = o
            adj_arc[slot] = aid
            adj_next[slot] = adj_head[s]
            adj_head[s] = slot
            slot += 1
    seen = np.zeros(nn, dtype=bool)
    stack = [root]
    seen[root] = True
    while stack:
        x = stack.pop()
        sl = adj_head[x]
        while sl != -1:
            y = int(adj_node[sl])
            aid = int(adj_arc[sl])
            if not seen[y]:
                seen[y] = True
                parent[y] = x
                pred_arc[y] = aid
                depth[y] = depth[x] + 1
                _attach(x, y, first_child, next_sib, prev_sib)
                pot[y] = cost[aid] - pot[x]
                stack.append(y)
            sl = int(adj_next[sl])
    if not seen.all():
        raise AssertionError("initial staircase basis is not spanning")

    row_ptr, row_ids = _csr_incidence(arc_u[:num_real], m)
    col_ptr, col_ids = _csr_incidence(arc_v[:num_real] - m, n)
    red = cost[:num_real] - pot[arc_u[:num_real]] - pot[arc_v[:num_real]]

    code = _simplex_kernel(
        m, num_real, arc_u, arc_v, cost, flow, red, pot,
        parent, pred_arc, depth, first_child, next_sib, prev_sib,
        row_ptr, row_ids, col_ptr, col_ids, artificial_ids,
        reduced_cost_tol, feas_tol, stall_factor * nn, MAX_PIVOTS,
        BIG_M_GROWTH, BIG_M_ESCALATIONS,
    )
    if code == _STATUS_STUCK:
        raise RuntimeError("pivot limit exceeded; solver is stuck")
    status = "optimal" if code == _STATUS_OPTIMAL else "infeasible"
    objective = float(np.dot(flow[:num_real], ac))
    return flow, pot, objective, status
