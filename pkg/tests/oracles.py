"""Independent reference computations used by the tests.

Nothing here imports the package's solvers.
"""
from __future__ import annotations

import math
from fractions import Fraction

import numpy as np
from scipy.optimize import linprog


def quantile_wp_cost(x, a, y, b, p):
    """W_p^p on the line from the two quantile functions.

    Breakpoints of both CDFs are merged; on each piece both quantile
    functions are constant, evaluated at the piece midpoint.
    """
    x, a, y, b = map(np.asarray, (x, a, y, b))
    ox, oy = np.argsort(x), np.argsort(y)
    xs, ys = x[ox], y[oy]
    A, B = np.cumsum(a[ox]), np.cumsum(b[oy])
    A[-1] = B[-1] = 1.0
    ts = np.unique(np.concatenate([[0.0], A, B]))
    total = 0.0
    for lo, hi in zip(ts[:-1], ts[1:]):
        mid = 0.5 * (lo + hi)
        qx = xs[min(np.searchsorted(A, mid), xs.size - 1)]
        qy = ys[min(np.searchsorted(B, mid), ys.size - 1)]
        total += (hi - lo) * abs(qx - qy) ** p
    return total


def vertex_min_cost(C, a, b):
    """Minimum of <C, P> over all vertices of the transportation polytope.

    ``a`` and ``b`` are sequences of Fractions summing to 1.  Every vertex
    is a spanning forest, which always has a leaf line (a row or column
    with a single basic cell) carrying its whole remaining amount to one
    partner.  Peeling leaves one at a time therefore enumerates every
    vertex; the memo over remaining amounts makes that a DP.  Amounts are
    kept as exact integers over a common denominator, and lines whose
    remaining amount is 0 carry no mass and are dropped without branching.
    """
    a = [Fraction(v) for v in a]
    b = [Fraction(v) for v in b]
    L = math.lcm(*[v.denominator for v in a + b])
    ia = tuple(int(v * L) for v in a)
    ib = tuple(int(v * L) for v in b)
    k, l = len(a), len(b)
    Cs = [[float(C[i][j]) / L for j in range(l)] for i in range(k)]
    memo = {}

    def best(rows, cols):
        rows = tuple(-1 if v == 0 else v for v in rows)
        cols = tuple(-1 if v == 0 else v for v in cols)
        key = rows + cols
        if key in memo:
            return memo[key]
        live_r = [i for i in range(k) if rows[i] > 0]
        live_c = [j for j in range(l) if cols[j] > 0]
        if not live_r and not live_c:
            return 0.0
        out = math.inf
        for i in live_r:
            s = rows[i]
            nr = rows[:i] + (-1,) + rows[i + 1:]
            for j in live_c:
                if cols[j] >= s:
                    nc = cols[:j] + (cols[j] - s,) + cols[j + 1:]
                    out = min(out, s * Cs[i][j] + best(nr, nc))
        for j in live_c:
            s = cols[j]
            nc = cols[:j] + (-1,) + cols[j + 1:]
            for i in live_r:
                if rows[i] > s:
                    nr = rows[:i] + (rows[i] - s,) + rows[i + 1:]
                    out = min(out, s * Cs[i][j] + best(nr, nc))
        memo[key] = out
        return out

    return best(ia, ib)


def lp_cost(C, a, b):
    """Transportation LP optimum via HiGHS."""
    C = np.asarray(C, dtype=float)
    k, l = C.shape
    Aeq = np.zeros((k + l, k * l))
    for i in range(k):
        Aeq[i, i * l:(i + 1) * l] = 1.0
    for j in range(l):
        Aeq[k + j, j::l] = 1.0
    res = linprog(C.ravel(), A_eq=Aeq, b_eq=np.concatenate([a, b]), bounds=(0, None),
                  method="highs")
    assert res.status == 0
    return res.fun


def pcost(X, Y, p):
    """|x_i - y_j|^p by direct powering; 1-D inputs are read as column vectors."""
    X = np.asarray(X, float)
    Y = np.asarray(Y, float)
    X = X[:, None] if X.ndim == 1 else X
    Y = Y[:, None] if Y.ndim == 1 else Y
    D = np.sqrt(((X[:, None, :] - Y[None, :, :]) ** 2).sum(-1))
    return D ** p


def smoothed_uniform_quadrature(z, a, b, sigma, nodes=200):
    """Density of U[a, b] * N(0, sigma^2) at z by Gauss-Legendre quadrature."""
    t, w = np.polynomial.legendre.leggauss(nodes)
    u = 0.5 * (b - a) * t + 0.5 * (a + b)
    w = 0.5 * (b - a) * w
    z = np.asarray(z, float)[:, None]
    phi = np.exp(-0.5 * ((z - u[None, :]) / sigma) ** 2) / (math.sqrt(2 * math.pi) * sigma)
    return (phi * w[None, :]).sum(1) / (b - a)


def rational_weights(rng, k, denom=12):
    """k positive Fractions summing to 1 with denominator ``denom``."""
    cuts = sorted(rng.choice(np.arange(1, denom), size=k - 1, replace=False).tolist())
    parts = np.diff([0] + cuts + [denom])
    return [Fraction(int(v), denom) for v in parts]
