"""Dual Sobolev norms on regular 1-D and 2-D grids.

Nodes sit at cell centres: an axis with N nodes and spacing h covers
[origin - h/2, origin + (N - 1/2) h].  Gradients live on the dual cells
spanned by neighbouring nodes (edges in 1-D, 2x2 node blocks in 2-D), each
carrying the harmonic mean of its corner densities.  In 2-D the squared
gradient on a cell averages the two x-differences and the two
y-differences, so the same cell structure serves p = 2 and general p.
With zero-flux boundaries there are no cells across the boundary, which is
the mirrored-ghost-node condition; periodic grids wrap around.

For p = 2 the norm comes from one weighted Laplacian solve.  For other p,
the convex energy

    J(phi) = (1/q) sum_c rho_c |grad phi|_c^q vol - sum_i h_i phi_i vol

is minimised and the norm is (-p J*)^(1/p).
"""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Optional, Union

import numpy as np
from scipy import sparse
from scipy.sparse import linalg as spla
from scipy.special import ndtr

from . import ot
from .errors import ConfigurationError, GridTooSmallError, SolverError
from .measures import (DiscreteMeasure, DistributionSpec, SmoothingConfig, empirical,
                       sample)
from .seeding import as_seed_path

BOUNDARY_MASS_TOL = 1e-6
BOUNDARIES = ("periodic", "zero_flux")


@dataclass(frozen=True)
class Grid:
    dim: int
    nodes_per_axis: tuple
    spacing: tuple
    origin: tuple
    boundary: str = "zero_flux"

    def __post_init__(self):
        if self.dim not in (1, 2):
            raise ConfigurationError("grids are 1-D or 2-D")
        for name in ("nodes_per_axis", "spacing", "origin"):
            val = tuple(np.atleast_1d(getattr(self, name)).tolist())
            if len(val) != self.dim:
                raise ConfigurationError(f"{name} needs {self.dim} entries")
            object.__setattr__(self, name, val)
        object.__setattr__(self, "nodes_per_axis", tuple(int(n) for n in self.nodes_per_axis))
        object.__setattr__(self, "spacing", tuple(float(s) for s in self.spacing))
        object.__setattr__(self, "origin", tuple(float(o) for o in self.origin))
        if min(self.nodes_per_axis) < 4:
            raise ConfigurationError("at least 4 nodes per axis")
        if not all(s > 0 and math.isfinite(s) for s in self.spacing):
            raise ConfigurationError("spacing must be positive")
        if self.boundary not in BOUNDARIES:
            raise ConfigurationError(f"boundary must be one of {BOUNDARIES}")

    @classmethod
    def covering(cls, low, high, nodes, boundary="zero_flux") -> "Grid":
        """Grid whose cells tile the box [low, high] exactly."""
        low = np.atleast_1d(np.asarray(low, dtype=float))
        high = np.atleast_1d(np.asarray(high, dtype=float))
        nodes = np.broadcast_to(np.atleast_1d(nodes), low.shape).astype(int)
        h = (high - low) / nodes
        return cls(low.size, tuple(nodes), tuple(h), tuple(low + h / 2), boundary)

    @classmethod
    def periodic_unit(cls, nodes: int) -> "Grid":
        """Periodic grid on [0, 1) with nodes at k / nodes."""
        return cls(1, (nodes,), (1.0 / nodes,), (0.0,), "periodic")

    @property
    def n_nodes(self) -> int:
        return int(np.prod(self.nodes_per_axis))

    @property
    def cell_volume(self) -> float:
        return float(np.prod(self.spacing))

    def axes(self):
        return [o + h * np.arange(n) for o, h, n in
                zip(self.origin, self.spacing, self.nodes_per_axis)]

    def coords(self) -> np.ndarray:
        """Node coordinates, shape (n_nodes, dim), C order over axes."""
        mesh = np.meshgrid(*self.axes(), indexing="ij")
        return np.stack([m.ravel() for m in mesh], axis=1)

    def domain_box(self):
        lows = np.array(self.origin) - np.array(self.spacing) / 2
        highs = lows + np.array(self.spacing) * np.array(self.nodes_per_axis)
        return lows, highs

    def refined(self) -> "Grid":
        """Same domain, spacing halved."""
        n = tuple(2 * k for k in self.nodes_per_axis)
        if self.boundary == "periodic":
            h = tuple(s / 2 for s in self.spacing)
            return Grid(self.dim, n, h, self.origin, "periodic")
        lows, highs = self.domain_box()
        return Grid.covering(lows, highs, n, self.boundary)


def _grid_csv(grid: Grid, values) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow([f"x{i}" for i in range(grid.dim)] + ["value"])
    for row, v in zip(grid.coords(), values):
        w.writerow([repr(float(c)) for c in row] + [repr(float(v))])
    return buf.getvalue()


@dataclass(frozen=True)
class GridMeasure:
    grid: Grid
    density: np.ndarray

    def __post_init__(self):
        d = np.asarray(self.density, dtype=float).ravel()
        if d.size != self.grid.n_nodes:
            raise ConfigurationError("density needs one value per node")
        if np.any(d < 0) or not np.all(np.isfinite(d)):
            raise ConfigurationError("density must be finite and nonnegative")
        if abs(math.fsum(d) * self.grid.cell_volume - 1.0) > 1e-10:
            raise ConfigurationError("density must integrate to 1 on the grid")
        d.setflags(write=False)
        object.__setattr__(self, "density", d)

    @classmethod
    def normalized(cls, grid: Grid, values) -> "GridMeasure":
        v = np.asarray(values, dtype=float).ravel()
        total = math.fsum(v) * grid.cell_volume
        if not total > 0:
            raise ConfigurationError("cannot normalize a zero density")
        return cls(grid, v / total)

    def masses(self) -> np.ndarray:
        return self.density * self.grid.cell_volume

    def to_discrete(self) -> DiscreteMeasure:
        w = self.masses()
        return DiscreteMeasure(self.grid.coords(), w / math.fsum(w))

    def __sub__(self, other: "GridMeasure") -> "GridSigned":
        if other.grid != self.grid:
            raise ConfigurationError("measures live on different grids")
        return GridSigned(self.grid, self.density - other.density)

    def to_csv(self) -> str:
        return _grid_csv(self.grid, self.density)


@dataclass(frozen=True)
class GridSigned:
    grid: Grid
    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float).ravel()
        if v.size != self.grid.n_nodes:
            raise ConfigurationError("values need one entry per node")
        if not np.all(np.isfinite(v)):
            raise ConfigurationError("values must be finite")
        scale = max(1.0, float(np.abs(v).sum()) * self.grid.cell_volume)
        if abs(math.fsum(v) * self.grid.cell_volume) > 1e-8 * scale:
            raise ConfigurationError("a signed grid measure must have total mass 0")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    def __mul__(self, a: float) -> "GridSigned":
        return GridSigned(self.grid, float(a) * self.values)

    __rmul__ = __mul__

    def to_csv(self) -> str:
        return _grid_csv(self.grid, self.values)


@dataclass(frozen=True)
class GradientField:
    """Discrete gradient of a node potential, one row per dual cell.

    In 1-D the single column is the edge difference quotient.  In 2-D the
    columns are the bottom/top x-differences and left/right y-differences,
    each divided by sqrt(2) so that the row norm is |grad phi| on the cell.
    """
    grid: Grid
    components: np.ndarray

    def cell_norms(self) -> np.ndarray:
        return np.sqrt(np.sum(self.components ** 2, axis=1))


@dataclass(frozen=True)
class DualNormResult:
    norm: float
    potential: np.ndarray
    gradient: GradientField
    objective: float
    iterations: int
    residual: float


@dataclass(frozen=True)
class ComparisonReport:
    lhs: float
    rhs: float
    rhs_c0: float
    rhs_c1: float
    c0: float
    c1: float
    dual_norm: float
    holds: bool


# --- discrete operators -------------------------------------------------------

@dataclass(frozen=True)
class _Ops:
    A: sparse.csr_matrix        # (cells * r) x nodes
    corners: np.ndarray         # cells x (2 or 4)
    r: int
    S: sparse.csr_matrix = field(default=None)   # cells x (cells * r) row summation


@lru_cache(maxsize=32)
def _operators(grid: Grid) -> _Ops:
    periodic = grid.boundary == "periodic"
    if grid.dim == 1:
        (n,), (h,) = grid.nodes_per_axis, grid.spacing
        left = np.arange(n if periodic else n - 1)
        right = (left + 1) % n
        ne = left.size
        rows = np.repeat(np.arange(ne), 2)
        cols = np.stack([left, right], axis=1).ravel()
        vals = np.tile([-1.0 / h, 1.0 / h], ne)
        A = sparse.csr_matrix((vals, (rows, cols)), shape=(ne, n))
        return _Ops(A, np.stack([left, right], axis=1), 1, sparse.identity(ne, format="csr"))
    (n0, n1), (h0, h1) = grid.nodes_per_axis, grid.spacing
    c0 = np.arange(n0 if periodic else n0 - 1)
    c1 = np.arange(n1 if periodic else n1 - 1)
    I, J = np.meshgrid(c0, c1, indexing="ij")
    I, J = I.ravel(), J.ravel()
    Ip, Jp = (I + 1) % n0, (J + 1) % n1
    a = I * n1 + J          # (i, j)
    b = Ip * n1 + J         # (i+1, j)
    c = I * n1 + Jp         # (i, j+1)
    d = Ip * n1 + Jp        # (i+1, j+1)
    nc = I.size
    s = 1.0 / math.sqrt(2.0)
    base = 4 * np.arange(nc)
    rows = np.concatenate([base, base, base + 1, base + 1, base + 2, base + 2, base + 3, base + 3])
    cols = np.concatenate([a, b, c, d, a, c, b, d])
    vals = np.concatenate([np.full(nc, -s / h0), np.full(nc, s / h0),
                           np.full(nc, -s / h0), np.full(nc, s / h0),
                           np.full(nc, -s / h1), np.full(nc, s / h1),
                           np.full(nc, -s / h1), np.full(nc, s / h1)])
    A = sparse.csr_matrix((vals, (rows, cols)), shape=(4 * nc, n0 * n1))
    S = sparse.csr_matrix((np.ones(4 * nc), (np.repeat(np.arange(nc), 4), np.arange(4 * nc))),
                          shape=(nc, 4 * nc))
    return _Ops(A, np.stack([a, b, c, d], axis=1), 4, S)


def _cell_weights(rho: GridMeasure, ops: _Ops) -> np.ndarray:
    """Harmonic mean of corner densities times cell volume."""
    corner = rho.density[ops.corners]
    if np.any(corner <= 0):
        raise ConfigurationError("reference density must be strictly positive on the grid")
    hm = corner.shape[1] / np.sum(1.0 / corner, axis=1)
    return hm * rho.grid.cell_volume


def _check_pair(rho: GridMeasure, h: GridSigned):
    if rho.grid != h.grid:
        raise ConfigurationError("rho and h live on different grids")


def _rhs(h: GridSigned) -> np.ndarray:
    b = h.values * h.grid.cell_volume
    return b - b.mean()


def weighted_laplacian(rho: GridMeasure) -> sparse.csr_matrix:
    ops = _operators(rho.grid)
    w = np.repeat(_cell_weights(rho, ops), ops.r)
    return (ops.A.T @ sparse.diags(w) @ ops.A).tocsr()


def solve_p2(rho: GridMeasure, h: GridSigned, rtol: float = 1e-10,
             max_iter: Optional[int] = None) -> DualNormResult:
    """Solve div(rho grad u) = -h with Jacobi-preconditioned CG, mean-zero gauge."""
    _check_pair(rho, h)
    grid = rho.grid
    ops = _operators(grid)
    w = np.repeat(_cell_weights(rho, ops), ops.r)
    L = (ops.A.T @ sparse.diags(w) @ ops.A).tocsr()
    b = _rhs(h)
    bnorm = float(np.linalg.norm(b))
    if bnorm == 0.0:
        u = np.zeros(grid.n_nodes)
        return DualNormResult(0.0, u, GradientField(grid, np.zeros((ops.S.shape[0], ops.r))),
                              0.0, 0, 0.0)
    if max_iter is None:
        max_iter = 20 * grid.n_nodes + 1000
    diag = L.diagonal()
    M = sparse.diags(1.0 / diag)
    iters = [0]

    def count(_):
        iters[0] += 1

    u, info = spla.cg(L, b, rtol=rtol, atol=0.0, maxiter=max_iter, M=M, callback=count)
    u = u - u.mean()
    residual = float(np.linalg.norm(b - L @ u)) / bnorm
    if info != 0 or residual > 10 * rtol:
        raise SolverError(f"CG stopped at relative residual {residual:.3e}", residual=residual)
    G = ops.A @ u
    energy = math.fsum(w * G * G)
    comps = G.reshape(-1, ops.r)
    return DualNormResult(math.sqrt(max(energy, 0.0)), u, GradientField(grid, comps),
                          -0.5 * energy, iters[0], residual)


def dual_norm_p2(rho: GridMeasure, h: GridSigned, rtol: float = 1e-10,
                 max_iter: Optional[int] = None) -> float:
    """||h|| in the weighted dual Sobolev space for p = 2 on the grid."""
    return solve_p2(rho, h, rtol, max_iter).norm


class _Energy:
    """J with |G|^q replaced by (|G|^2 + eps^2)^(q/2); eps = 0 gives the exact energy."""

    def __init__(self, rho, h, p):
        self.ops = _operators(rho.grid)
        self.w = _cell_weights(rho, self.ops)
        self.b = _rhs(h)
        self.p = p
        self.q = p / (p - 1.0)
        self.eps = 0.0

    def norms(self, G):
        if self.ops.r == 1:
            return np.abs(G)
        return np.sqrt(np.sum(G.reshape(-1, self.ops.r) ** 2, axis=1))

    def value(self, phi, eps=None):
        eps = self.eps if eps is None else eps
        s = self.norms(self.ops.A @ phi)
        t = s * s + eps * eps if eps else s * s
        return math.fsum(self.w * t ** (self.q / 2)) / self.q - math.fsum(self.b * phi)

    def _coef(self, s):
        t = s * s + self.eps * self.eps
        with np.errstate(divide="ignore", invalid="ignore"):
            return np.where(t > 0, t ** (self.q / 2 - 1.0), 0.0), t

    def gradient(self, phi, G=None, s=None):
        if G is None:
            G = self.ops.A @ phi
            s = self.norms(G)
        coef, _ = self._coef(s)
        return self.ops.A.T @ (np.repeat(self.w * coef, self.ops.r) * G) - self.b

    def hessian(self, G, s):
        q, r, A = self.q, self.ops.r, self.ops.A
        coef, t = self._coef(s)
        base = self.w * coef
        Gm = G.reshape(-1, r)
        if r == 1:
            with np.errstate(divide="ignore", invalid="ignore"):
                frac = np.where(t > 0, (G * G) / t, 0.0)
            return (A.T @ sparse.diags(base * (1.0 + (q - 2.0) * frac)) @ A).tocsr()
        H = A.T @ sparse.diags(np.repeat(base, r)) @ A
        with np.errstate(divide="ignore", invalid="ignore"):
            unit = np.where(t[:, None] > 0, Gm / np.sqrt(np.where(t > 0, t, 1.0))[:, None], 0.0)
        B = self.ops.S @ sparse.diags(unit.ravel()) @ A
        H = H + B.T @ sparse.diags((q - 2.0) * base) @ B
        return H.tocsr()


def _newton_stage(E: _Energy, phi, tol, max_iter):
    J = E.value(phi)
    for it in range(1, max_iter + 1):
        G = E.ops.A @ phi
        s = E.norms(G)
        g = E.gradient(phi, G, s)
        H = E.hessian(G, s)
        d = np.zeros_like(phi)
        d[1:] = spla.spsolve(H[1:, 1:].tocsc(), -g[1:])
        dec = -float(g @ d)
        if not dec > 0:
            return phi, J, it
        t = 1.0
        while True:
            trial = phi + t * d
            Jt = E.value(trial)
            if Jt <= J - 1e-4 * t * dec:
                break
            t *= 0.5
            if t < 1e-12:
                if dec <= 1e-9 * abs(J):
                    return phi, J, it
                raise SolverError(f"line search failed; last objective {J!r}", residual=dec)
        change = abs(J - Jt)
        phi, J = trial, Jt
        if change <= tol * abs(J) and 0.5 * dec <= 10 * tol * abs(J):
            return phi, J, it
    raise SolverError(f"no convergence in {max_iter} Newton steps; last objective {J!r}",
                      residual=J)


def _newton(E: _Energy, phi, tol, max_iter):
    """Damped Newton with continuation in the smoothing parameter eps."""
    smax = float(E.norms(E.ops.A @ phi).max())
    total = 0
    if E.q == 2.0:
        E.eps = 0.0
        phi, J, it = _newton_stage(E, phi, tol, max_iter)
        return phi, J, it
    eps = 1e-1 * smax
    while True:
        E.eps = eps
        phi, _, it = _newton_stage(E, phi, tol, max_iter)
        total += it
        if eps <= 1e-9 * smax:
            break
        eps *= 0.1
    E.eps = 0.0
    return phi, E.value(phi), total


def _accelerated(E: _Energy, phi, tol, max_iter):
    """Nesterov descent with backtracking on the local Lipschitz estimate and restarts."""
    J = E.value(phi)
    L = 1.0
    y, x_prev, tk = phi.copy(), phi.copy(), 1.0
    for it in range(1, max_iter + 1):
        Jy = E.value(y)
        gy = E.gradient(y)
        gy -= gy.mean()
        gg = float(gy @ gy)
        while True:
            x = y - gy / L
            Jx = E.value(x)
            if Jx <= Jy - 0.5 * gg / L:
                break
            L *= 2.0
        if Jx > J:  # restart momentum
            y, tk = x_prev.copy(), 1.0
            continue
        change = abs(J - Jx)
        t_next = 0.5 * (1.0 + math.sqrt(1.0 + 4.0 * tk * tk))
        y = x + ((tk - 1.0) / t_next) * (x - x_prev)
        x_prev, J, tk = x, Jx, t_next
        L *= 0.9
        if change <= tol * abs(J) and it > 10:
            return x, J, it
    raise SolverError(f"no convergence in {max_iter} iterations; last objective {J!r}",
                      residual=J)


def solve_general_p(rho: GridMeasure, h: GridSigned, p: float, tol: float = 1e-13,
                    max_iter: int = 200, method: str = "newton") -> DualNormResult:
    """Minimise the discrete energy J over node potentials.

    The p = 2 potential, rescaled optimally along its ray, is the starting
    point.  ``method`` is ``"newton"`` (damped Newton, default) or
    ``"accelerated"`` (Nesterov gradient descent; slower, for cross-checks).
    """
    _check_pair(rho, h)
    if not (math.isfinite(p) and p > 1):
        raise ConfigurationError("p must be > 1")
    grid = rho.grid
    base = solve_p2(rho, h)
    if base.norm == 0.0:
        return base
    E = _Energy(rho, h, p)
    u = base.potential
    s_u = E.norms(E.ops.A @ u)
    a = math.fsum(E.w * s_u ** E.q)
    bu = math.fsum(E.b * u)
    phi = u * (bu / a) ** (1.0 / (E.q - 1.0))
    if method == "newton":
        phi, J, it = _newton(E, phi, tol, max_iter)
    elif method == "accelerated":
        phi, J, it = _accelerated(E, phi, tol, max_iter)
    else:
        raise ConfigurationError(f"unknown method {method!r}")
    phi = phi - phi.mean()
    G = E.ops.A @ phi
    norm = max(-p * J, 0.0) ** (1.0 / p)
    g = E.gradient(phi)
    resid = float(np.linalg.norm(g)) / max(float(np.linalg.norm(E.b)), 1e-300)
    return DualNormResult(norm, phi, GradientField(grid, G.reshape(-1, E.ops.r)), J, it, resid)


def dual_norm_general_p(rho: GridMeasure, h: GridSigned, p: float, tol: float = 1e-13,
                        max_iter: int = 200, method: str = "newton") -> float:
    """||h|| in the weighted dual Sobolev space of exponent p on the grid."""
    return solve_general_p(rho, h, p, tol, max_iter, method).norm


def dual_norm(rho: GridMeasure, h: GridSigned, p: float, **kw) -> float:
    if p == 2:
        return dual_norm_p2(rho, h)
    return dual_norm_general_p(rho, h, p, **kw)


def dual_norm_1d_closed_form(rho: GridMeasure, h: GridSigned, p: float) -> float:
    """Zero-flux 1-D grids only: (sum_e |H_e|^p rho_e^(1-p) dx)^(1/p), H the running mass of h."""
    grid = rho.grid
    if grid.dim != 1 or grid.boundary != "zero_flux":
        raise ConfigurationError("closed form needs a 1-D zero-flux grid")
    dx = grid.spacing[0]
    H = np.cumsum(h.values * dx)[:-1]
    ops = _operators(grid)
    rho_e = _cell_weights(rho, ops) / dx
    return math.fsum(np.abs(H) ** p * rho_e ** (1.0 - p) * dx) ** (1.0 / p)


# --- projections and simulation ---------------------------------------------------

def _discrete_outside_mass(mu: DiscreteMeasure, lows, highs, sigma) -> float:
    inside = np.ones(mu.size)
    for k in range(mu.dim):
        x = mu.points[:, k]
        inside *= ndtr((highs[k] - x) / sigma) - ndtr((lows[k] - x) / sigma)
    return float(np.dot(mu.weights, 1.0 - inside))


def _mixture_density(mu: DiscreteMeasure, z: np.ndarray, sigma: float, chunk=1 << 22):
    d = mu.dim
    out = np.zeros(z.shape[0])
    const = (2 * math.pi * sigma * sigma) ** (-d / 2)
    step = max(1, chunk // max(mu.size, 1))
    for s in range(0, z.shape[0], step):
        zz = z[s:s + step]
        sq = np.zeros((zz.shape[0], mu.size))
        for k in range(d):
            sq += (zz[:, k:k + 1] - mu.points[None, :, k]) ** 2
        out[s:s + step] = const * (np.exp(-sq / (2 * sigma * sigma)) @ mu.weights)
    return out


def project_to_grid(source: Union[DistributionSpec, DiscreteMeasure], sigma: float,
                    grid: Grid) -> GridMeasure:
    """Node values of the sigma-smoothed density, renormalized to unit grid mass.

    Raises
    ------
    GridTooSmallError
        If more than 1e-6 of the smoothed mass falls outside the grid.
    """
    if source.dim != grid.dim:
        raise ConfigurationError("source and grid dimensions differ")
    if not sigma >= 0:
        raise ConfigurationError("sigma must be >= 0")
    lows, highs = grid.domain_box()
    z = grid.coords()
    if isinstance(source, DistributionSpec):
        outside = source.mass_outside_box(lows, highs, sigma)
        dens = source.smoothed_density(z, sigma)
    elif isinstance(source, DiscreteMeasure):
        if sigma == 0:
            raise ConfigurationError("a discrete measure has no density at sigma=0")
        outside = _discrete_outside_mass(source, lows, highs, sigma)
        dens = _mixture_density(source, z, sigma)
    else:
        raise TypeError("source must be a DistributionSpec or DiscreteMeasure")
    if outside > BOUNDARY_MASS_TOL:
        raise GridTooSmallError(f"{outside:.3e} of the smoothed mass lies outside the grid")
    return GridMeasure.normalized(grid, dens)


def covering_grid(spec: DistributionSpec, sigma: float, nodes: int,
                  boundary: str = "zero_flux", tol: float = 1e-7) -> Grid:
    """Smallest symmetric padding (in steps of sigma/4) that keeps outside mass below ``tol``."""
    lo = np.zeros(spec.dim)
    hi = np.zeros(spec.dim)
    # start from a central box of the spec's support or scale
    for ax in range(spec.dim):
        lo_ax, hi_ax = np.inf, -np.inf
        for _, factors in spec.components:
            f = factors[ax]
            if f[0] == "point":
                a, b = f[1], f[1]
            elif f[0] == "uniform":
                a, b = f[1], f[2]
            else:
                a = f[3] if math.isfinite(f[3]) else f[1] - 3 * f[2]
                b = f[4] if math.isfinite(f[4]) else f[1] + 3 * f[2]
            lo_ax, hi_ax = min(lo_ax, a), max(hi_ax, b)
        lo[ax], hi[ax] = lo_ax, hi_ax
    pad = 0.0
    step = max(sigma, 1e-3) / 4
    while spec.mass_outside_box(lo - pad, hi + pad, sigma) > tol:
        pad += step
    return Grid.covering(lo - pad, hi + pad, nodes, boundary)


def null_limit_draw(spec: DistributionSpec, rho: GridMeasure, cfg: SmoothingConfig,
                    n_surrogate: int, seed_path, **norm_kw) -> float:
    """One surrogate draw of the null-limit statistic."""
    s = sample(spec, n_surrogate, as_seed_path(seed_path))
    emp = project_to_grid(empirical(s), cfg.sigma, rho.grid)
    h = GridSigned(rho.grid, math.sqrt(n_surrogate) * (emp.density - rho.density))
    return dual_norm(rho, h, cfg.p, **norm_kw)


def simulate_null_limit(spec: DistributionSpec, cfg: SmoothingConfig, grid: Grid,
                        n_surrogate: int, R: int, seed_path, **norm_kw) -> list:
    """R draws of ||sqrt(n) (smoothed empirical - smoothed population)|| on the grid.

    Replicate r uses ``seed_path.child("rep", r)``.
    """
    if n_surrogate < 1000:
        raise ConfigurationError("n_surrogate must be at least 1000")
    seed_path = as_seed_path(seed_path)
    rho = project_to_grid(spec, cfg.sigma, grid)
    return [null_limit_draw(spec, rho, cfg, n_surrogate, seed_path.child("rep", r), **norm_kw)
            for r in range(R)]


# --- comparison inequality ---------------------------------------------------

def coarsen(mu: GridMeasure, max_atoms: int = 400) -> DiscreteMeasure:
    """Merge contiguous node blocks into their mass centroids until at most ``max_atoms`` remain."""
    grid = mu.grid
    coords = grid.coords()
    masses = mu.masses()
    if grid.dim == 1:
        b = max(1, math.ceil(grid.n_nodes / max_atoms))
        block = np.arange(grid.n_nodes) // b
    else:
        n0, n1 = grid.nodes_per_axis
        b = max(1, math.ceil(math.sqrt(grid.n_nodes / max_atoms)))
        while math.ceil(n0 / b) * math.ceil(n1 / b) > max_atoms:
            b += 1
        I, J = np.meshgrid(np.arange(n0) // b, np.arange(n1) // b, indexing="ij")
        block = (I * math.ceil(n1 / b) + J).ravel()
    nb = int(block.max()) + 1
    bm = np.bincount(block, weights=masses, minlength=nb)
    cnt = np.bincount(block, minlength=nb)
    pts = np.empty((nb, grid.dim))
    for k in range(grid.dim):
        num = np.bincount(block, weights=masses * coords[:, k], minlength=nb)
        centre = np.bincount(block, weights=coords[:, k], minlength=nb) / cnt
        pts[:, k] = np.where(bm > 0, num / np.where(bm > 0, bm, 1.0), centre)
    return DiscreteMeasure(pts, bm / math.fsum(bm))


def verify_comparison(rho: GridMeasure, mu0: GridMeasure, mu1: GridMeasure, p: float,
                      max_atoms: int = 400, slack: float = 0.05, **norm_kw) -> ComparisonReport:
    """Check W_p(mu0, mu1) <= p c^(-1/q) ||mu1 - mu0|| on the grid.

    c is the minimum over nodes of dmu1/drho (``c1``) or dmu0/drho (``c0``);
    the bound is evaluated for each valid c and ``holds`` uses the smaller
    right-hand side.
    """
    if not (rho.grid == mu0.grid == mu1.grid):
        raise ConfigurationError("all three measures must share one grid")
    if np.any(rho.density <= 0):
        raise ConfigurationError("rho must be strictly positive")
    q = p / (p - 1.0)
    c0 = float(np.min(mu0.density / rho.density))
    c1 = float(np.min(mu1.density / rho.density))
    if max(c0, c1) <= 0:
        raise ConfigurationError("density lower bound c must be > 0")
    a, b = coarsen(mu0, max_atoms), coarsen(mu1, max_atoms)
    if rho.grid.dim == 1:
        lhs_cost = ot.wasserstein_1d_cost(a, b, p)
    else:
        lhs_cost = ot.solve_exact(a, b, p)[0].primal_cost
    lhs = max(lhs_cost, 0.0) ** (1.0 / p)
    norm = dual_norm(rho, mu1 - mu0, p, **norm_kw)
    rhs0 = p * c0 ** (-1.0 / q) * norm if c0 > 0 else math.inf
    rhs1 = p * c1 ** (-1.0 / q) * norm if c1 > 0 else math.inf
    rhs = min(rhs0, rhs1)
    return ComparisonReport(lhs, rhs, rhs0, rhs1, c0, c1, norm, lhs <= rhs * (1.0 + slack))


def random_smooth_density(grid: Grid, rng: np.random.Generator, n_modes: int = 4,
                          amplitude: float = 1.0) -> GridMeasure:
    """exp of a random low-frequency trigonometric sum, normalized on the grid."""
    lows, highs = grid.domain_box()
    z = (grid.coords() - lows) / (highs - lows)
    logd = np.zeros(grid.n_nodes)
    for ax in range(grid.dim):
        for k in range(1, n_modes + 1):
            a, b = rng.normal(0.0, amplitude / k, 2)
            logd += a * np.cos(2 * math.pi * k * z[:, ax]) + b * np.sin(2 * math.pi * k * z[:, ax])
    return GridMeasure.normalized(grid, np.exp(logd))
