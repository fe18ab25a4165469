"""Compiled inner loops for the transport solvers.

* ``transport_simplex``: primal network simplex on the bipartite
  transportation graph (Dantzig pricing, Bland fallback on degenerate runs).
* ``staircase`` / ``staircase_cost``: the monotone (north-west corner)
  coupling of two sorted 1-D measures given by cumulative weights.
* ``tree_duals_path``: duals along a staircase spanning path.
* ``monotone_ctransform``: c-transform for sorted 1-D supports using the
  monotonicity of argmins of a Monge matrix.
"""
import numpy as np
from numba import njit

STATUS_OPTIMAL = 0
STATUS_MAX_ITER = 1


@njit(cache=True)
def pair_cost(a, b, p):
    d = abs(a - b)
    if d == 0.0:
        return 0.0
    return np.exp(p * np.log(d))


@njit(cache=True)
def staircase(A, B):
    k = A.shape[0]
    l = B.shape[0]
    n = k + l - 1
    I = np.empty(n, np.int64)
    J = np.empty(n, np.int64)
    M = np.empty(n)
    i = 0
    j = 0
    prev = 0.0
    for t in range(n):
        I[t] = i
        J[t] = j
        top = A[i] if A[i] < B[j] else B[j]
        mass = top - prev
        M[t] = mass if mass > 0.0 else 0.0
        if top > prev:
            prev = top
        if i == k - 1:
            j += 1
        elif j == l - 1:
            i += 1
        elif A[i] <= B[j]:
            i += 1
        else:
            j += 1
    return I, J, M


@njit(cache=True)
def staircase_cost(x, A, y, B, p):
    k = A.shape[0]
    l = B.shape[0]
    i = 0
    j = 0
    prev = 0.0
    total = 0.0
    for _ in range(k + l - 1):
        top = A[i] if A[i] < B[j] else B[j]
        if top > prev:
            total += (top - prev) * pair_cost(x[i], y[j], p)
            prev = top
        if i == k - 1:
            j += 1
        elif j == l - 1:
            i += 1
        elif A[i] <= B[j]:
            i += 1
        else:
            j += 1
    return total


@njit(cache=True)
def tree_duals_path(x, y, I, J, p, k, l):
    g = np.zeros(k)
    h = np.zeros(l)
    h[J[0]] = pair_cost(x[I[0]], y[J[0]], p)
    for t in range(1, I.shape[0]):
        i = I[t]
        j = J[t]
        c = pair_cost(x[i], y[j], p)
        if i != I[t - 1]:
            g[i] = c - h[j]
        else:
            h[j] = c - g[i]
    return g, h


@njit(cache=True)
def monotone_ctransform(x, g, y, p):
    """h_j = min_i |x_i - y_j|^p - g_i for ascending x and y."""
    k = x.shape[0]
    l = y.shape[0]
    out = np.empty(l)
    stack = np.empty((2 * l + 64, 4), np.int64)
    top = 0
    stack[0, 0] = 0
    stack[0, 1] = l - 1
    stack[0, 2] = 0
    stack[0, 3] = k - 1
    top = 1
    while top > 0:
        top -= 1
        jlo = stack[top, 0]
        jhi = stack[top, 1]
        ilo = stack[top, 2]
        ihi = stack[top, 3]
        if jlo > jhi:
            continue
        jm = (jlo + jhi) // 2
        best = np.inf
        bi = ilo
        ym = y[jm]
        for i in range(ilo, ihi + 1):
            v = pair_cost(x[i], ym, p) - g[i]
            if v < best:
                best = v
                bi = i
        out[jm] = best
        if jlo <= jm - 1:
            stack[top, 0] = jlo
            stack[top, 1] = jm - 1
            stack[top, 2] = ilo
            stack[top, 3] = bi
            top += 1
        if jm + 1 <= jhi:
            stack[top, 0] = jm + 1
            stack[top, 1] = jhi
            stack[top, 2] = bi
            stack[top, 3] = ihi
            top += 1
    return out


@njit(cache=True)
def transport_simplex(C, a, b, max_iter):
    k, l = C.shape
    nn = k + l
    nb = nn - 1

    # north-west corner start: a spanning tree with k + l - 1 basic cells
    A = np.cumsum(a)
    B = np.cumsum(b)
    A[k - 1] = 1.0
    B[l - 1] = 1.0
    bi, bj, flow = staircase(A, B)

    u = np.zeros(k)
    v = np.zeros(l)
    deg = np.zeros(nn, np.int64)
    start = np.zeros(nn + 1, np.int64)
    fill = np.zeros(nn, np.int64)
    adj = np.empty(2 * nb, np.int64)
    parent = np.empty(nn, np.int64)
    parc = np.empty(nn, np.int64)
    depth = np.empty(nn, np.int64)
    queue = np.empty(nn, np.int64)
    tpath = np.empty(nn, np.int64)
    spath = np.empty(nn, np.int64)
    cyc = np.empty(nn, np.int64)

    cmax = 0.0
    for i in range(k):
        for j in range(l):
            if C[i, j] > cmax:
                cmax = C[i, j]
    tol = 1e-11 * (1.0 if cmax < 1.0 else cmax)

    bland = False
    streak = 0
    it = 0
    status = STATUS_OPTIMAL
    while True:
        # spanning-tree adjacency and potentials (root: source 0, u_0 = 0)
        deg[:] = 0
        for e in range(nb):
            deg[bi[e]] += 1
            deg[k + bj[e]] += 1
        start[0] = 0
        for nd in range(nn):
            start[nd + 1] = start[nd] + deg[nd]
            fill[nd] = start[nd]
        for e in range(nb):
            s = bi[e]
            t = k + bj[e]
            adj[fill[s]] = e
            fill[s] += 1
            adj[fill[t]] = e
            fill[t] += 1
        depth[:] = -1
        depth[0] = 0
        parent[0] = -1
        parc[0] = -1
        u[0] = 0.0
        head = 0
        tail = 1
        queue[0] = 0
        while head < tail:
            nd = queue[head]
            head += 1
            for q in range(start[nd], start[nd + 1]):
                e = adj[q]
                if nd < k:
                    other = k + bj[e]
                else:
                    other = bi[e]
                if depth[other] >= 0:
                    continue
                if nd < k:
                    v[bj[e]] = C[nd, bj[e]] - u[nd]
                else:
                    u[bi[e]] = C[bi[e], nd - k] - v[nd - k]
                depth[other] = depth[nd] + 1
                parent[other] = nd
                parc[other] = e
                queue[tail] = other
                tail += 1

        # pricing
        ei = -1
        ej = -1
        if bland:
            for i in range(k):
                for j in range(l):
                    if C[i, j] - u[i] - v[j] < -tol:
                        ei = i
                        ej = j
                        break
                if ei >= 0:
                    break
        else:
            best = -tol
            for i in range(k):
                ui = u[i]
                for j in range(l):
                    r = C[i, j] - ui - v[j]
                    if r < best:
                        best = r
                        ei = i
                        ej = j
        if ei < 0:
            break
        if it >= max_iter:
            status = STATUS_MAX_ITER
            break
        it += 1

        # cycle: entering cell, then tree path from sink ej back to source ei
        na = k + ej
        nb_ = ei
        nt = 0
        ns = 0
        while depth[na] > depth[nb_]:
            tpath[nt] = parc[na]
            nt += 1
            na = parent[na]
        while depth[nb_] > depth[na]:
            spath[ns] = parc[nb_]
            ns += 1
            nb_ = parent[nb_]
        while na != nb_:
            tpath[nt] = parc[na]
            nt += 1
            na = parent[na]
            spath[ns] = parc[nb_]
            ns += 1
            nb_ = parent[nb_]
        nc = 0
        for q in range(nt):
            cyc[nc] = tpath[q]
            nc += 1
        for q in range(ns - 1, -1, -1):
            cyc[nc] = spath[q]
            nc += 1

        # ratio test over the decreasing arcs (even positions); ties -> lowest cell index
        theta = np.inf
        leave = -1
        leave_key = 0
        for q in range(0, nc, 2):
            e = cyc[q]
            f = flow[e]
            key = bi[e] * l + bj[e]
            if f < theta or (f == theta and key < leave_key):
                theta = f
                leave = e
                leave_key = key
        for q in range(nc):
            e = cyc[q]
            if q % 2 == 0:
                flow[e] -= theta
            else:
                flow[e] += theta
        bi[leave] = ei
        bj[leave] = ej
        flow[leave] = theta

        if theta == 0.0:
            streak += 1
            if streak > nn:
                bland = True
        else:
            streak = 0

    return bi, bj, flow, u, v, status, it
