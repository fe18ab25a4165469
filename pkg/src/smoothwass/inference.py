"""Bootstrap laws, confidence intervals and the two-sample equality test.

Replicate ``b`` of every scheme draws its resampling indices from
``seed_path.child("rep", b, "resample")`` and its smoothing noise from
``seed_path.child("rep", b, "noise")``, so a distribution is a pure function
of (data, cfg, B, seed_path).

In the centred schemes (``one_sample_alt``, ``two_sample_alt``) the baseline
distance is recomputed with the replicate's own noise tensor, matched by
row index, so the difference reflects resampling only.
"""
from __future__ import annotations

import csv
import io
import json
import math
import warnings
from dataclasses import dataclass
from typing import Optional, Union

import numpy as np

from .errors import ConfigurationError
from .estimator import swd
from .measures import DiscreteMeasure, Sample, SmoothingConfig, draw_noise, empirical, pool, smooth_augment
from .seeding import SeedPath, as_seed_path

SCHEMES = ("one_sample_null", "one_sample_alt", "two_sample_alt", "pooled_null", "naive_null")
DEFAULT_B = 500


@dataclass(frozen=True)
class BootstrapDistribution:
    values: np.ndarray
    B: int
    scheme: str
    seed_path: Optional[SeedPath]
    scaled: bool = True

    def __post_init__(self):
        v = np.sort(np.asarray(self.values, dtype=float))
        if v.size != self.B:
            raise ConfigurationError("values must have length B")
        if not np.all(np.isfinite(v)):
            raise ConfigurationError("bootstrap values must be finite")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["value"])
        for v in self.values:
            w.writerow([repr(float(v))])
        return buf.getvalue()


@dataclass(frozen=True)
class TestResult:
    statistic: float
    critical_value: float
    p_value: float
    reject: bool
    alpha: float

    __test__ = False  # not a pytest class

    def to_json(self) -> str:
        return json.dumps({"statistic": self.statistic, "critical_value": self.critical_value,
                           "p_value": self.p_value, "reject": self.reject,
                           "alpha": self.alpha}, sort_keys=True)


@dataclass(frozen=True)
class ConfidenceInterval:
    lo: float
    hi: float
    estimate: float
    alpha: float

    def to_json(self) -> str:
        return json.dumps({"lo": self.lo, "hi": self.hi, "estimate": self.estimate,
                           "alpha": self.alpha}, sort_keys=True)

    def __iter__(self):
        return iter((self.lo, self.hi))

    def contains(self, value: float) -> bool:
        return self.lo <= value <= self.hi


def _check_B(B):
    if not isinstance(B, (int, np.integer)) or B < 1:
        raise ConfigurationError("B must be a positive integer")


def _resample(s: Sample, rng: np.random.Generator, n: Optional[int] = None) -> Sample:
    idx = rng.integers(0, s.n, size=s.n if n is None else n)
    return Sample(s.points[idx])


def _rep(seed_path: SeedPath, b: int):
    r = seed_path.child("rep", b)
    return r.child("resample"), r.child("noise")


def _boot_cfg(cfg, m):
    return cfg if m is None else cfg.with_m(m)


def bootstrap_one_sample_null(x: Sample, cfg: SmoothingConfig, B: int = DEFAULT_B,
                              seed_path=0, m: Optional[int] = None) -> BootstrapDistribution:
    """sqrt(n) W(x*, x) over B resamples, independent fresh noise on both sides."""
    _check_B(B)
    seed_path, c = as_seed_path(seed_path), _boot_cfg(cfg, m)
    vals = np.empty(B)
    for b in range(B):
        rs, ns = _rep(seed_path, b)
        xb = _resample(x, rs.rng())
        vals[b] = math.sqrt(x.n) * swd(xb, x, c, ns)
    return BootstrapDistribution(vals, B, "one_sample_null", seed_path)


def _as_dense(nu_dense, cfg, seed_path):
    if isinstance(nu_dense, DiscreteMeasure):
        return nu_dense
    return smooth_augment(empirical(nu_dense), cfg, seed_path.child("nu_dense"))


def bootstrap_one_sample_alt(x: Sample, nu_dense: Union[Sample, DiscreteMeasure],
                             cfg: SmoothingConfig, B: int = DEFAULT_B, seed_path=0,
                             m: Optional[int] = None) -> BootstrapDistribution:
    """sqrt(n) (W(x*, nu) - W(x, nu)) with the baseline recomputed per replicate.

    ``nu_dense`` is either a smoothed reference measure (used as is) or a raw
    dense sample, smoothed once.
    """
    _check_B(B)
    seed_path, c = as_seed_path(seed_path), _boot_cfg(cfg, m)
    nu = _as_dense(nu_dense, c, seed_path)
    vals = np.empty(B)
    for b in range(B):
        rs, ns = _rep(seed_path, b)
        xb = _resample(x, rs.rng())
        z = draw_noise(x.n, c.m, x.dim, ns)
        vals[b] = math.sqrt(x.n) * (swd(xb, nu, c, None, noise_x=z) - swd(x, nu, c, None, noise_x=z))
    return BootstrapDistribution(vals, B, "one_sample_alt", seed_path)


def _equal_sizes(x, y):
    if x.dim != y.dim:
        raise ConfigurationError("samples differ in dimension")
    if x.n != y.n:
        raise ConfigurationError("two-sample schemes need equal sample sizes")


def bootstrap_two_sample_alt(x: Sample, y: Sample, cfg: SmoothingConfig, B: int = DEFAULT_B,
                             seed_path=0, m: Optional[int] = None) -> BootstrapDistribution:
    """sqrt(n) (W(x*, y*) - W(x, y)) with independent resamples and matched noise."""
    _check_B(B)
    _equal_sizes(x, y)
    seed_path, c = as_seed_path(seed_path), _boot_cfg(cfg, m)
    vals = np.empty(B)
    for b in range(B):
        rs, ns = _rep(seed_path, b)
        rng = rs.rng()
        xb, yb = _resample(x, rng), _resample(y, rng)
        zx = draw_noise(x.n, c.m, x.dim, ns.child("x"))
        zy = draw_noise(y.n, c.m, y.dim, ns.child("y"))
        vals[b] = math.sqrt(x.n) * (swd(xb, yb, c, None, noise_x=zx, noise_y=zy)
                                    - swd(x, y, c, None, noise_x=zx, noise_y=zy))
    return BootstrapDistribution(vals, B, "two_sample_alt", seed_path)


def bootstrap_pooled_null(x: Sample, y: Sample, cfg: SmoothingConfig, B: int = DEFAULT_B,
                          seed_path=0, m: Optional[int] = None) -> BootstrapDistribution:
    """sqrt(n) W(first n, last n) of 2n draws from the pooled sample."""
    _check_B(B)
    _equal_sizes(x, y)
    seed_path, c = as_seed_path(seed_path), _boot_cfg(cfg, m)
    pooled = pool(x, y)
    n = x.n
    vals = np.empty(B)
    for b in range(B):
        rs, ns = _rep(seed_path, b)
        draw = _resample(pooled, rs.rng(), 2 * n)
        vals[b] = math.sqrt(n) * swd(Sample(draw.points[:n]), Sample(draw.points[n:]), c, ns)
    return BootstrapDistribution(vals, B, "pooled_null", seed_path)


def bootstrap_naive_null(x: Sample, y: Sample, cfg: SmoothingConfig, B: int = DEFAULT_B,
                         seed_path=0, m: Optional[int] = None) -> BootstrapDistribution:
    """sqrt(n) W(x*, y*) from separate resamples.  Inconsistent under the null; demo only."""
    warnings.warn("the naive two-sample bootstrap is not consistent under the null "
                  "(its conditional law does not approach the law of sqrt(n) W(x, y)); "
                  "use bootstrap_pooled_null for inference", UserWarning, stacklevel=2)
    _check_B(B)
    _equal_sizes(x, y)
    seed_path, c = as_seed_path(seed_path), _boot_cfg(cfg, m)
    vals = np.empty(B)
    for b in range(B):
        rs, ns = _rep(seed_path, b)
        rng = rs.rng()
        vals[b] = math.sqrt(x.n) * swd(_resample(x, rng), _resample(y, rng), c, ns)
    return BootstrapDistribution(vals, B, "naive_null", seed_path)


def quantile(dist: BootstrapDistribution, alpha: float) -> float:
    """Lower empirical quantile values[ceil(alpha B) - 1], index clamped to [0, B-1]."""
    if dist.B == 0 or dist.values.size == 0:
        raise ConfigurationError("empty bootstrap distribution")
    if not 0.0 <= alpha <= 1.0:
        raise ConfigurationError("alpha must lie in [0, 1]")
    # absorb representation error such as 0.95 * 500 = 474.99999999999994
    k = math.ceil(alpha * dist.B - 1e-9) - 1
    return float(dist.values[min(max(k, 0), dist.B - 1)])


def confidence_interval(x: Sample, y: Sample, cfg: SmoothingConfig, alpha: float = 0.05,
                        B: int = DEFAULT_B, seed_path=0,
                        m: Optional[int] = None) -> ConfidenceInterval:
    """Basic bootstrap interval [2W - z_{1-alpha/2}, 2W - z_{alpha/2}], lower end clamped at 0.

    z are quantiles of the unscaled W(x*, y*) over independent resamples with
    fresh noise, so smoothing noise is propagated into the interval.
    """
    if not 0.0 < alpha < 1.0:
        raise ConfigurationError("alpha must lie in (0, 1)")
    _check_B(B)
    _equal_sizes(x, y)
    seed_path, c = as_seed_path(seed_path), _boot_cfg(cfg, m)
    w_hat = swd(x, y, cfg, seed_path.child("estimate"))
    vals = np.empty(B)
    for b in range(B):
        rs, ns = _rep(seed_path, b)
        rng = rs.rng()
        vals[b] = swd(_resample(x, rng), _resample(y, rng), c, ns)
    dist = BootstrapDistribution(vals, B, "two_sample_alt", seed_path, scaled=False)
    lo = 2 * w_hat - quantile(dist, 1 - alpha / 2)
    hi = 2 * w_hat - quantile(dist, alpha / 2)
    return ConfidenceInterval(max(lo, 0.0), max(hi, 0.0), w_hat, alpha)


def equality_test(x: Sample, y: Sample, cfg: SmoothingConfig, alpha: float = 0.1,
                  B: int = DEFAULT_B, seed_path=0, common_noise: bool = False,
                  m: Optional[int] = None) -> TestResult:
    """Reject mu = nu when sqrt(n) W(x, y) exceeds the pooled-bootstrap (1 - alpha) quantile."""
    if not 0.0 < alpha < 1.0:
        raise ConfigurationError("alpha must lie in (0, 1)")
    _equal_sizes(x, y)
    seed_path = as_seed_path(seed_path)
    stat = math.sqrt(x.n) * swd(x, y, cfg, seed_path.child("statistic"), common_noise=common_noise)
    dist = bootstrap_pooled_null(x, y, cfg, B, seed_path.child("bootstrap"), m)
    crit = quantile(dist, 1 - alpha)
    p_value = (1 + int(np.count_nonzero(dist.values >= stat))) / (B + 1)
    return TestResult(stat, crit, p_value, bool(stat > crit), alpha)


BOOTSTRAPS = {
    "one_sample_null": bootstrap_one_sample_null,
    "one_sample_alt": bootstrap_one_sample_alt,
    "two_sample_alt": bootstrap_two_sample_alt,
    "pooled_null": bootstrap_pooled_null,
    "naive_null": bootstrap_naive_null,
}
