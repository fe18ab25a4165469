"""Distribution specs, samples, empirical measures and Gaussian-noise augmentation.

Every family is stored internally as a mixture of product components, each
axis of a component being one of three 1-D factors (point, normal, uniform).
That single representation drives sampling, the exact smoothed density used
on grids, and the boundary-mass bound.
"""
from __future__ import annotations

import csv
import io
import json
import logging
import math
import warnings
from dataclasses import dataclass, field
from functools import cached_property
from typing import Optional

import numpy as np
from scipy import special

from .errors import ConfigurationError
from .seeding import SeedPath, as_seed_path

logger = logging.getLogger(__name__)

FAMILIES = ("point_mass", "gaussian", "uniform_box", "gaussian_mixture", "uniform_mixture")
MAX_DIM = 3
_SQRT2PI = math.sqrt(2.0 * math.pi)


def _frozen(a, dtype=float):
    a = np.array(a, dtype=dtype)
    a.setflags(write=False)
    return a


def _vec(value, dim, name):
    v = np.asarray(value, dtype=float).reshape(-1)
    if v.size == 1 and dim > 1:
        v = np.repeat(v, dim)
    if v.size != dim:
        raise ConfigurationError(f"{name} has length {v.size}, expected dim={dim}")
    if not np.all(np.isfinite(v)):
        raise ConfigurationError(f"{name} must be finite")
    return v


def _check_weights(w):
    w = np.asarray(w, dtype=float).reshape(-1)
    if w.size == 0 or np.any(w < 0) or not np.all(np.isfinite(w)):
        raise ConfigurationError("mixture weights must be finite and nonnegative")
    if abs(w.sum() - 1.0) > 1e-12:
        raise ConfigurationError(f"mixture weights sum to {w.sum()!r}, not 1")
    return w


# --- 1-D factors ------------------------------------------------------------
# ("point", a) | ("normal", mean, sd, lo, hi) | ("uniform", a, b)

def _factor_density(f, z, sigma):
    kind = f[0]
    if kind == "point":
        return np.exp(-0.5 * ((z - f[1]) / sigma) ** 2) / (_SQRT2PI * sigma)
    if kind == "uniform":
        a, b = f[1], f[2]
        if sigma == 0:
            return np.where((z >= a) & (z <= b), 1.0 / (b - a), 0.0)
        return (special.ndtr((z - a) / sigma) - special.ndtr((z - b) / sigma)) / (b - a)
    _, m, s, lo, hi = f
    tau = math.hypot(s, sigma)
    base = np.exp(-0.5 * ((z - m) / tau) ** 2) / (_SQRT2PI * tau)
    if math.isinf(lo) and math.isinf(hi):
        return base
    z_t = special.ndtr((hi - m) / s) - special.ndtr((lo - m) / s)
    if sigma == 0:
        return np.where((z >= lo) & (z <= hi), base / z_t, 0.0)
    c = (m * sigma**2 + z * s**2) / tau**2
    r = s * sigma / tau
    return base * (special.ndtr((hi - c) / r) - special.ndtr((lo - c) / r)) / z_t


def _factor_outside(f, lo_edge, hi_edge, sigma):
    """Upper bound on smoothed mass of the factor outside [lo_edge, hi_edge]."""
    kind = f[0]
    if kind == "point":
        a = b = f[1]
        scale = sigma
    elif kind == "uniform":
        a, b = f[1], f[2]
        scale = sigma
    else:
        _, m, s, lo, hi = f
        if math.isinf(lo) and math.isinf(hi):
            tau = math.hypot(s, sigma)
            return special.ndtr((lo_edge - m) / tau) + special.ndtr((m - hi_edge) / tau)
        a, b, scale = lo, hi, sigma
    if scale == 0:
        return float(a < lo_edge) + float(b > hi_edge)
    return special.ndtr((lo_edge - a) / scale) + special.ndtr((b - hi_edge) / scale)


def _factor_sample(f, u):
    kind = f[0]
    if kind == "point":
        return np.full_like(u, f[1])
    if kind == "uniform":
        return f[1] + (f[2] - f[1]) * u
    _, m, s, lo, hi = f
    if math.isinf(lo) and math.isinf(hi):
        return m + s * special.ndtri(u)
    pa, pb = special.ndtr((lo - m) / s), special.ndtr((hi - m) / s)
    return np.clip(m + s * special.ndtri(pa + u * (pb - pa)), lo, hi)


@dataclass(frozen=True)
class DistributionSpec:
    """A population law mu or nu on R^d.

    ``params`` by family:

    * point_mass: ``location``
    * gaussian: ``mean``, ``scale`` (per-axis sd), optional ``lower``/``upper``
      truncation bounds
    * uniform_box: ``low``, ``high``
    * gaussian_mixture: ``weights``, ``means`` (K x d), ``scales`` (K or K x d)
    * uniform_mixture: ``weights``, ``lows``, ``highs`` (K x d each)

    ``sub_gaussian_psi2`` is an optional declared bound on the Orlicz psi_2
    norm of |X|, consulted by :func:`check_moment_condition`.
    """

    family: str
    params: dict
    dim: int = 1
    sub_gaussian_psi2: Optional[float] = None
    label: Optional[str] = None

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ConfigurationError(f"unknown family {self.family!r}")
        if not isinstance(self.dim, (int, np.integer)) or not 1 <= self.dim <= MAX_DIM:
            raise ConfigurationError(f"dim must be an integer in [1, {MAX_DIM}]")
        if self.sub_gaussian_psi2 is not None and not self.sub_gaussian_psi2 >= 0:
            raise ConfigurationError("sub_gaussian_psi2 must be nonnegative")
        # validates as a side effect
        self.components  # noqa: B018

    @cached_property
    def components(self):
        """List of (weight, [factor per axis])."""
        d, fam, P = self.dim, self.family, self.params
        try:
            if fam == "point_mass":
                loc = _vec(P["location"], d, "location")
                return [(1.0, [("point", x) for x in loc])]
            if fam == "gaussian":
                return [(1.0, self._gauss_factors(P["mean"], P["scale"],
                                                  P.get("lower"), P.get("upper")))]
            if fam == "uniform_box":
                return [(1.0, self._box_factors(P["low"], P["high"]))]
            w = _check_weights(P["weights"])
            if fam == "gaussian_mixture":
                means = np.asarray(P["means"], dtype=float).reshape(len(w), -1)
                scales = np.asarray(P["scales"], dtype=float).reshape(len(w), -1)
                return [(float(wk), self._gauss_factors(means[k], scales[k]))
                        for k, wk in enumerate(w)]
            lows = np.asarray(P["lows"], dtype=float).reshape(len(w), -1)
            highs = np.asarray(P["highs"], dtype=float).reshape(len(w), -1)
            return [(float(wk), self._box_factors(lows[k], highs[k])) for k, wk in enumerate(w)]
        except KeyError as exc:
            raise ConfigurationError(f"{fam} spec is missing parameter {exc}") from None
        except ValueError as exc:
            if isinstance(exc, ConfigurationError):
                raise
            raise ConfigurationError(f"malformed {fam} parameters: {exc}") from None

    def _gauss_factors(self, mean, scale, lower=None, upper=None):
        d = self.dim
        mean, scale = _vec(mean, d, "mean"), _vec(scale, d, "scale")
        if np.any(scale <= 0):
            raise ConfigurationError("scales must be strictly positive")
        lo = np.full(d, -np.inf) if lower is None else _vec(lower, d, "lower")
        hi = np.full(d, np.inf) if upper is None else _vec(upper, d, "upper")
        if np.any(lo >= hi):
            raise ConfigurationError("truncation bounds must satisfy lower < upper")
        return [("normal", mean[i], scale[i], lo[i], hi[i]) for i in range(d)]

    def _box_factors(self, low, high):
        low, high = _vec(low, self.dim, "low"), _vec(high, self.dim, "high")
        if np.any(high <= low):
            raise ConfigurationError("uniform boxes need high > low on every axis")
        return [("uniform", a, b) for a, b in zip(low, high)]

    @property
    def compact(self) -> bool:
        for _, factors in self.components:
            for f in factors:
                if f[0] == "normal" and (math.isinf(f[3]) or math.isinf(f[4])):
                    return False
        return True

    def smoothed_density(self, z, sigma):
        """Density of spec * N(0, sigma^2 I) at the rows of ``z`` (n x d)."""
        z = np.atleast_2d(np.asarray(z, dtype=float))
        out = np.zeros(z.shape[0])
        for w, factors in self.components:
            term = np.full(z.shape[0], w)
            for axis, f in enumerate(factors):
                if f[0] == "point" and sigma == 0:
                    raise ConfigurationError("a point mass has no density at sigma=0")
                term *= _factor_density(f, z[:, axis], sigma)
            out += term
        return out

    def mass_outside_box(self, lows, highs, sigma) -> float:
        """Upper bound on the smoothed mass outside the box [lows, highs]."""
        total = 0.0
        for w, factors in self.components:
            inside = 1.0
            for axis, f in enumerate(factors):
                inside *= max(0.0, 1.0 - _factor_outside(f, lows[axis], highs[axis], sigma))
            total += w * (1.0 - inside)
        return float(min(1.0, total))

    def to_json_dict(self) -> dict:
        def plain(v):
            return np.asarray(v).tolist() if isinstance(v, (np.ndarray, list, tuple)) else v
        out = {"family": self.family,
               "params": {k: plain(v) for k, v in self.params.items()},
               "dim": int(self.dim)}
        if self.sub_gaussian_psi2 is not None:
            out["psi2"] = self.sub_gaussian_psi2
        return out

    @classmethod
    def from_json_dict(cls, obj: dict) -> "DistributionSpec":
        try:
            return cls(obj["family"], dict(obj["params"]), int(obj.get("dim", 1)),
                       obj.get("psi2"))
        except (KeyError, TypeError) as exc:
            raise ConfigurationError(f"bad distribution spec JSON: {exc}") from None

    def to_json(self) -> str:
        return json.dumps(self.to_json_dict(), sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "DistributionSpec":
        return cls.from_json_dict(json.loads(text))


def point_mass(location) -> DistributionSpec:
    loc = np.atleast_1d(np.asarray(location, dtype=float))
    return DistributionSpec("point_mass", {"location": loc.tolist()}, loc.size)


def gaussian(mean, scale=1.0, lower=None, upper=None, psi2=None) -> DistributionSpec:
    mean = np.atleast_1d(np.asarray(mean, dtype=float))
    params = {"mean": mean.tolist(), "scale": np.atleast_1d(scale).astype(float).tolist()}
    if lower is not None:
        params["lower"] = np.atleast_1d(lower).astype(float).tolist()
    if upper is not None:
        params["upper"] = np.atleast_1d(upper).astype(float).tolist()
    return DistributionSpec("gaussian", params, mean.size, psi2)


def uniform_box(low, high) -> DistributionSpec:
    low = np.atleast_1d(np.asarray(low, dtype=float))
    return DistributionSpec("uniform_box", {"low": low.tolist(),
                                            "high": np.atleast_1d(high).astype(float).tolist()},
                            low.size)


@dataclass(frozen=True)
class Sample:
    """n i.i.d. draws as an n x d matrix."""

    points: np.ndarray
    spec_label: Optional[str] = None
    seed_path: Optional[SeedPath] = None

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=float)
        if pts.ndim == 1:
            pts = pts[:, None]
        if pts.ndim != 2 or pts.shape[0] < 1:
            raise ConfigurationError("a sample needs at least one row")
        if not np.all(np.isfinite(pts)):
            raise ConfigurationError("sample entries must be finite")
        object.__setattr__(self, "points", _frozen(pts))

    @property
    def n(self) -> int:
        return self.points.shape[0]

    @property
    def dim(self) -> int:
        return self.points.shape[1]

    def to_csv(self, path=None) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow([f"x{i}" for i in range(self.dim)])
        for row in self.points:
            writer.writerow([repr(float(v)) for v in row])
        text = buf.getvalue()
        if path is not None:
            with open(path, "w", newline="") as fh:
                fh.write(text)
        return text

    @classmethod
    def from_csv(cls, source, spec_label=None) -> "Sample":
        """Read a sample from a path or CSV text (header row optional)."""
        if isinstance(source, str) and "\n" not in source and not source.lstrip().startswith("x"):
            with open(source, newline="") as fh:
                text = fh.read()
        else:
            text = source
        rows = [r for r in csv.reader(io.StringIO(text)) if r]
        if rows and not _is_number(rows[0][0]):
            rows = rows[1:]
        try:
            pts = np.array([[float(v) for v in r] for r in rows], dtype=float)
        except ValueError as exc:
            raise ConfigurationError(f"bad sample CSV: {exc}") from None
        return cls(pts, spec_label)


def _is_number(s):
    try:
        float(s)
    except ValueError:
        return False
    return True


@dataclass(frozen=True)
class DiscreteMeasure:
    """Weighted point cloud; ``origin_index`` maps noise children to parents."""

    points: np.ndarray
    weights: np.ndarray
    origin_index: Optional[np.ndarray] = None

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=float)
        if pts.ndim == 1:
            pts = pts[:, None]
        w = np.asarray(self.weights, dtype=float).reshape(-1)
        if pts.shape[0] == 0:
            raise ConfigurationError("empty measure")
        if w.shape[0] != pts.shape[0]:
            raise ConfigurationError("weights and points disagree in length")
        if not np.all(np.isfinite(pts)):
            raise ConfigurationError("support points must be finite")
        if np.any(w < 0) or abs(math.fsum(w) - 1.0) > 1e-12:
            raise ConfigurationError("weights must be nonnegative and sum to 1")
        object.__setattr__(self, "points", _frozen(pts))
        object.__setattr__(self, "weights", _frozen(w))
        if self.origin_index is not None:
            origin = np.asarray(self.origin_index, dtype=np.int64).reshape(-1)
            if origin.shape[0] != pts.shape[0]:
                raise ConfigurationError("origin_index must have one entry per point")
            object.__setattr__(self, "origin_index", _frozen(origin, np.int64))

    @property
    def size(self) -> int:
        return self.points.shape[0]

    @property
    def dim(self) -> int:
        return self.points.shape[1]

    @cached_property
    def sorted_1d(self):
        """(order, sorted points, cumulative weights) for d = 1; cached."""
        if self.dim != 1:
            raise ConfigurationError("sorted view only exists for d = 1")
        x = self.points[:, 0]
        order = np.argsort(x, kind="stable")
        cum = np.cumsum(self.weights[order])
        cum /= cum[-1]
        cum[-1] = 1.0
        for a in (order, cum):
            a.setflags(write=False)
        xs = x[order]
        xs.setflags(write=False)
        return order, xs, cum


@dataclass(frozen=True)
class SmoothingConfig:
    """Cost exponent p (q its conjugate), noise level sigma, noise copies m."""

    p: float
    sigma: float
    m: int = 32
    q: Optional[float] = field(default=None)

    def __post_init__(self):
        if not (np.isfinite(self.p) and self.p > 1):
            raise ConfigurationError("p must be a finite real > 1")
        if not (np.isfinite(self.sigma) and self.sigma > 0):
            raise ConfigurationError("sigma must be > 0")
        if int(self.m) != self.m or self.m < 1:
            raise ConfigurationError("m must be a positive integer")
        q = self.p / (self.p - 1.0)
        if self.q is not None and abs(1.0 / self.p + 1.0 / self.q - 1.0) > 1e-12:
            raise ConfigurationError("q must be the conjugate index of p")
        object.__setattr__(self, "q", q if self.q is None else float(self.q))
        object.__setattr__(self, "m", int(self.m))

    def with_m(self, m: int) -> "SmoothingConfig":
        return SmoothingConfig(self.p, self.sigma, m)

    def with_sigma(self, sigma: float) -> "SmoothingConfig":
        return SmoothingConfig(self.p, sigma, self.m)


def sample(spec: DistributionSpec, n: int, seed_path) -> Sample:
    """Draw ``n`` i.i.d. points from ``spec``; a pure function of ``seed_path``."""
    if not isinstance(n, (int, np.integer)) or n < 1:
        raise ConfigurationError("n must be a positive integer")
    seed_path = as_seed_path(seed_path)
    rng = seed_path.rng()
    comps = spec.components
    if len(comps) > 1:
        cum = np.cumsum([w for w, _ in comps])
        which = np.minimum(np.searchsorted(cum, rng.random(n), side="right"), len(comps) - 1)
    else:
        which = np.zeros(n, dtype=np.int64)
    u = rng.random((n, spec.dim))
    pts = np.empty((n, spec.dim))
    for k, (_, factors) in enumerate(comps):
        rows = which == k
        if not rows.any():
            continue
        for axis, f in enumerate(factors):
            pts[rows, axis] = _factor_sample(f, u[rows, axis])
    return Sample(pts, spec.label or spec.family, seed_path)


def empirical(s: Sample) -> DiscreteMeasure:
    n = s.n
    return DiscreteMeasure(s.points, np.full(n, 1.0 / n), np.arange(n))


def augment_points(points, sigma, noise):
    """Children x_i + sigma * noise[i, j]; ``noise`` has shape (k, m, d)."""
    k, m, d = noise.shape
    return (points[:, None, :] + sigma * noise).reshape(k * m, d)


def draw_noise(k, m, d, seed_path) -> np.ndarray:
    return as_seed_path(seed_path).rng().standard_normal((k, m, d))


def smooth_augment(mu: DiscreteMeasure, cfg: SmoothingConfig, seed_path,
                   noise: Optional[np.ndarray] = None) -> DiscreteMeasure:
    """Replace every atom by ``cfg.m`` Gaussian-perturbed copies.

    Child ``j`` of atom ``i`` sits at ``x_i + sigma * Z_ij`` with weight
    ``w_i / m``.  Pass ``noise`` (shape k x m x d) to reuse a frozen noise
    tensor instead of drawing one from ``seed_path``.
    """
    k, d, m = mu.size, mu.dim, cfg.m
    if noise is None:
        noise = draw_noise(k, m, d, seed_path)
    elif noise.shape != (k, m, d):
        raise ConfigurationError(f"noise tensor has shape {noise.shape}, expected {(k, m, d)}")
    pts = augment_points(mu.points, cfg.sigma, noise)
    w = np.repeat(mu.weights / m, m)
    return DiscreteMeasure(pts, w, np.repeat(np.arange(k), m))


def pool(x: Sample, y: Sample) -> Sample:
    """Stack X rows then Y rows: the 2n-point pooled sample."""
    if x.dim != y.dim:
        raise ConfigurationError("cannot pool samples of different dimension")
    if x.n != y.n:
        raise ConfigurationError("pooling requires equal sample sizes")
    return Sample(np.vstack([x.points, y.points]), "pooled")


@dataclass(frozen=True)
class MomentReport:
    satisfied: Optional[bool]
    detail: str


def check_moment_condition(spec: DistributionSpec, cfg: SmoothingConfig) -> MomentReport:
    """Advisory check of the sub-Gaussian moment condition needed by the limit theorems.

    Compact support always suffices; otherwise a declared psi_2 bound must be
    below ``sigma / sqrt(p - 1)``.  Returns ``satisfied=None`` when nothing can
    be concluded.  Never raises; warns when the condition is known to fail.
    """
    if spec.compact:
        return MomentReport(True, "compactly supported")
    threshold = cfg.sigma / math.sqrt(cfg.p - 1.0)
    if spec.sub_gaussian_psi2 is None:
        detail = "unbounded support and no psi2 bound declared"
        logger.info("moment condition unknown: %s", detail)
        return MomentReport(None, detail)
    if spec.sub_gaussian_psi2 < threshold:
        return MomentReport(True, f"psi2={spec.sub_gaussian_psi2:g} < sigma/sqrt(p-1)={threshold:g}")
    detail = f"psi2={spec.sub_gaussian_psi2:g} >= sigma/sqrt(p-1)={threshold:g}"
    warnings.warn(f"moment condition not certified: {detail}", stacklevel=2)
    return MomentReport(False, detail)
