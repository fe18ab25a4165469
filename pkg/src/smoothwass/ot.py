"""Exact optimal transport between discrete measures for the cost |x - y|^p.

:func:`solve_exact` runs a transportation network simplex on the full cost
matrix and is the reference solver in any dimension.  :func:`solve_1d` is the
fast path for the real line: the monotone coupling is optimal for every
convex cost of x - y, its staircase is a spanning tree of the bipartite
graph, and the duals follow by walking along it.
"""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass

import numpy as np
from scipy.spatial.distance import cdist

from . import _kernels
from .errors import ConfigurationError, SolverError
from .measures import DiscreteMeasure


@dataclass(frozen=True)
class TransportPlan:
    rows: np.ndarray
    cols: np.ndarray
    mass: np.ndarray
    primal_cost: float
    source_size: int
    target_size: int

    @property
    def entries(self):
        return list(zip(self.rows.tolist(), self.cols.tolist(), self.mass.tolist()))

    def dense(self) -> np.ndarray:
        P = np.zeros((self.source_size, self.target_size))
        np.add.at(P, (self.rows, self.cols), self.mass)
        return P

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["i", "j", "mass"])
        for i, j, m in zip(self.rows, self.cols, self.mass):
            w.writerow([int(i), int(j), repr(float(m))])
        return buf.getvalue()


@dataclass(frozen=True)
class DualPotentials:
    g: np.ndarray
    gc: np.ndarray
    dual_value: float

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["index", "value", "side"])
        for side, vals in (("source", self.g), ("target", self.gc)):
            for i, val in enumerate(vals):
                w.writerow([i, repr(float(val)), side])
        return buf.getvalue()


def cost_matrix(X, Y, p):
    """|x_i - y_j|^p computed as exp(p log|x - y|), zero where points coincide."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    Y = np.atleast_2d(np.asarray(Y, dtype=float))
    if X.shape[1] == 1:
        D = np.abs(X[:, 0][:, None] - Y[:, 0][None, :])
    else:
        D = cdist(X, Y)
    with np.errstate(divide="ignore"):
        C = np.where(D > 0, np.exp(p * np.log(np.where(D > 0, D, 1.0))), 0.0)
    return C


def c_transform(g, X, Y, p, chunk=2048):
    """h_j = min_i (|x_i - y_j|^p - g_i), evaluated by brute force."""
    g = np.asarray(g, dtype=float)
    X = np.atleast_2d(np.asarray(X, dtype=float))
    Y = np.atleast_2d(np.asarray(Y, dtype=float))
    if X.shape[0] == 1 and g.size > 1 and X.shape[1] == g.size:
        X = X.T
    if Y.shape[0] == 1 and X.shape[1] == 1 and Y.shape[1] > 1:
        Y = Y.T
    out = np.empty(Y.shape[0])
    for s in range(0, Y.shape[0], chunk):
        C = cost_matrix(X, Y[s:s + chunk], p)
        out[s:s + chunk] = np.min(C - g[:, None], axis=0)
    return out


def _check_pair(mu, nu, p):
    if not isinstance(mu, DiscreteMeasure) or not isinstance(nu, DiscreteMeasure):
        raise TypeError("expected DiscreteMeasure inputs")
    if mu.dim != nu.dim:
        raise ConfigurationError(f"dimension mismatch: {mu.dim} vs {nu.dim}")
    if not (np.isfinite(p) and p >= 1):
        raise ConfigurationError("p must be finite and >= 1")


def _normalize_duals(g, gc_fn, g_fn):
    g = g - g[0]
    gc = gc_fn(g)
    g = g_fn(gc)
    return g, gc


def solve_exact(mu: DiscreteMeasure, nu: DiscreteMeasure, p: float, max_iter=None):
    """Optimal plan and normalized duals for the transportation LP.

    Duals are canonicalized as: shift so ``g[0] = 0``, then ``gc = ct(g)``,
    then ``g = ct(gc)``.

    Returns
    -------
    (TransportPlan, DualPotentials)
    """
    _check_pair(mu, nu, p)
    C = cost_matrix(mu.points, nu.points, p)
    if not np.all(np.isfinite(C)):
        raise ConfigurationError("non-finite cost entries")
    k, l = C.shape
    if max_iter is None:
        max_iter = 50 * (k + l) * max(k, l) + 1000
    bi, bj, flow, _u, _v, status, _it = _kernels.transport_simplex(
        np.ascontiguousarray(C), np.asarray(mu.weights), np.asarray(nu.weights), int(max_iter))
    if status != _kernels.STATUS_OPTIMAL:
        raise SolverError(f"network simplex hit max_iter={max_iter}")
    keep = flow > 0
    rows, cols, mass = bi[keep], bj[keep], flow[keep]
    order = np.lexsort((cols, rows))
    rows, cols, mass = rows[order], cols[order], mass[order]
    primal = math.fsum(mass * C[rows, cols])
    g, gc = _normalize_duals(_u,
                             lambda g_: np.min(C - g_[:, None], axis=0),
                             lambda h_: np.min(C - h_[None, :], axis=1))
    dual = math.fsum(mu.weights * g) + math.fsum(nu.weights * gc)
    plan = TransportPlan(rows, cols, mass, primal, k, l)
    return plan, DualPotentials(g, gc, dual)


def solve_1d(mu: DiscreteMeasure, nu: DiscreteMeasure, p: float):
    """Monotone-coupling solver for d = 1 with the same dual normalization."""
    _check_pair(mu, nu, p)
    if mu.dim != 1:
        raise ConfigurationError("solve_1d needs d = 1")
    ox, xs, A = mu.sorted_1d
    oy, ys, B = nu.sorted_1d
    I, J, M = _kernels.staircase(A, B)
    gs, _hs = _kernels.tree_duals_path(xs, ys, I, J, float(p), xs.size, ys.size)
    # shift so the original index 0 has g = 0
    pos0 = int(np.flatnonzero(ox == 0)[0])
    gs = gs - gs[pos0]
    hs = _kernels.monotone_ctransform(xs, gs, ys, float(p))
    gs = _kernels.monotone_ctransform(ys, hs, xs, float(p))
    g = np.empty_like(gs)
    g[ox] = gs
    gc = np.empty_like(hs)
    gc[oy] = hs
    keep = M > 0
    rows, cols, mass = ox[I[keep]], oy[J[keep]], M[keep]
    costs = np.abs(xs[I[keep]] - ys[J[keep]])
    with np.errstate(divide="ignore"):
        costs = np.where(costs > 0, np.exp(p * np.log(np.where(costs > 0, costs, 1.0))), 0.0)
    primal = math.fsum(mass * costs)
    dual = math.fsum(mu.weights * g) + math.fsum(nu.weights * gc)
    plan = TransportPlan(rows, cols, mass, primal, mu.size, nu.size)
    return plan, DualPotentials(g, gc, dual)


def wasserstein_1d_cost(mu: DiscreteMeasure, nu: DiscreteMeasure, p: float) -> float:
    """W_p^p on the line by merging the two quantile partitions of [0, 1]."""
    _check_pair(mu, nu, p)
    if mu.dim != 1:
        raise ConfigurationError("wasserstein_1d needs d = 1")
    _, xs, A = mu.sorted_1d
    _, ys, B = nu.sorted_1d
    return float(_kernels.staircase_cost(xs, A, ys, B, float(p)))


def wasserstein_1d(mu: DiscreteMeasure, nu: DiscreteMeasure, p: float) -> float:
    """(int_0^1 |F^-1(t) - G^-1(t)|^p dt)^(1/p), exact for discrete measures."""
    return wasserstein_1d_cost(mu, nu, p) ** (1.0 / p)


def duality_gap(plan: TransportPlan, duals: DualPotentials, mu: DiscreteMeasure,
                nu: DiscreteMeasure) -> float:
    if duals.g.size != mu.size or duals.gc.size != nu.size:
        raise ConfigurationError("dual vectors do not match the measures")
    dual = math.fsum(mu.weights * duals.g) + math.fsum(nu.weights * duals.gc)
    return abs(plan.primal_cost - dual)
