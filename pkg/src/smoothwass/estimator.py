"""Monte Carlo estimates of the smooth Wasserstein distance and its plug-in variance.

Each sample is replaced by ``m`` Gaussian-perturbed copies per point and the
two clouds are compared with an exact OT solve.  On the line the monotone
solver is used; it returns the same LP optimum as the network simplex and
runs in O(N log N).
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Optional, Union

import numpy as np

from . import ot
from .errors import ConfigurationError, DegenerateNullError
from .measures import (DiscreteMeasure, DistributionSpec, Sample, SmoothingConfig,
                       draw_noise, empirical, sample, smooth_augment)
from .seeding import SeedPath, as_seed_path

DEGENERATE_TOL = 1e-8


@dataclass(frozen=True)
class SmoothDistanceEstimate:
    value_wp: float
    value_sp: float
    plan: ot.TransportPlan
    duals: ot.DualPotentials
    cfg: SmoothingConfig
    origin_maps: tuple
    n: int
    seed_path: Optional[SeedPath] = None

    def to_json_dict(self) -> dict:
        return {"value_wp": self.value_wp, "value_sp": self.value_sp, "p": self.cfg.p,
                "sigma": self.cfg.sigma, "m": self.cfg.m, "n": self.n,
                "seed_path": None if self.seed_path is None else str(self.seed_path)}

    def to_json(self) -> str:
        return json.dumps(self.to_json_dict(), sort_keys=True)


@dataclass(frozen=True)
class VarianceEstimate:
    v_squared: float
    components: tuple
    denominator: float
    mode: str

    def to_json_dict(self) -> dict:
        return {"v_squared": self.v_squared, "components": list(self.components),
                "denominator": self.denominator, "mode": self.mode}


def dense_reference(spec: DistributionSpec, cfg: SmoothingConfig, n_dense: int, seed_path,
                    m: Optional[int] = None) -> DiscreteMeasure:
    """Frozen smoothed stand-in for a known population: a large sample, augmented once."""
    seed_path = as_seed_path(seed_path)
    s = sample(spec, n_dense, seed_path.child("points"))
    c = cfg if m is None else cfg.with_m(m)
    return smooth_augment(empirical(s), c, seed_path.child("noise"))


def default_dense_size(n: int) -> int:
    return max(10 * n, 10_000)


def _augment_pair(x, y, cfg, seed_path, common_noise, noise_x, noise_y):
    """Smoothed clouds for both sides.  ``y`` may already be a smoothed DiscreteMeasure."""
    if seed_path is not None:
        seed_path = as_seed_path(seed_path)
    elif noise_x is None or (noise_y is None and not isinstance(y, DiscreteMeasure)
                             and not common_noise):
        raise ConfigurationError("seed_path may be None only when noise tensors are given")
    if isinstance(x, DiscreteMeasure):
        raise TypeError("x must be a Sample")
    if x.dim != (y.dim if not isinstance(y, DiscreteMeasure) else y.dim):
        raise ConfigurationError(f"dimension mismatch: {x.dim} vs {y.dim}")
    if isinstance(y, DiscreteMeasure):
        if common_noise:
            raise ConfigurationError("common noise needs two raw samples")
        if noise_x is None:
            noise_x = draw_noise(x.n, cfg.m, x.dim, seed_path.child("x"))
        return smooth_augment(empirical(x), cfg, None, noise_x), y
    if common_noise:
        if x.n != y.n:
            raise ConfigurationError("common noise requires equal sample sizes")
        if noise_x is None:
            noise_x = draw_noise(x.n, cfg.m, x.dim, seed_path.child("common"))
        noise_y = noise_x if noise_y is None else noise_y
    else:
        if noise_x is None:
            noise_x = draw_noise(x.n, cfg.m, x.dim, seed_path.child("x"))
        if noise_y is None:
            noise_y = draw_noise(y.n, cfg.m, y.dim, seed_path.child("y"))
    return (smooth_augment(empirical(x), cfg, None, noise_x),
            smooth_augment(empirical(y), cfg, None, noise_y))


def _solve(mu, nu, p):
    if mu.dim == 1:
        return ot.solve_1d(mu, nu, p)
    return ot.solve_exact(mu, nu, p)


def transport_cost(mu: DiscreteMeasure, nu: DiscreteMeasure, p: float) -> float:
    """W_p^p between discrete measures, skipping duals (fast path on the line)."""
    if mu.dim == 1:
        return ot.wasserstein_1d_cost(mu, nu, p)
    return ot.solve_exact(mu, nu, p)[0].primal_cost


def estimate_swd(x: Sample, y: Union[Sample, DiscreteMeasure], cfg: SmoothingConfig,
                 seed_path, common_noise: bool = False, noise_x=None,
                 noise_y=None) -> SmoothDistanceEstimate:
    """Estimate W_p^{(sigma)}(x, y) with its plan and duals.

    Parameters
    ----------
    x, y : Sample
        Raw samples.  ``y`` may instead be an already smoothed
        :class:`DiscreteMeasure` (a frozen dense reference), used as is.
    common_noise : bool
        Add the same noise tensor to both sides, matched by row index.
    noise_x, noise_y : ndarray, optional
        Explicit (n, m, d) standard normal tensors overriding the draws.
    """
    mu, nu = _augment_pair(x, y, cfg, seed_path, common_noise, noise_x, noise_y)
    plan, duals = _solve(mu, nu, cfg.p)
    sp = max(plan.primal_cost, 0.0)
    wp = sp ** (1.0 / cfg.p)
    return SmoothDistanceEstimate(wp, sp, plan, duals, cfg,
                                  (mu.origin_index, nu.origin_index), x.n,
                                  None if seed_path is None else as_seed_path(seed_path))


def swd(x: Sample, y: Union[Sample, DiscreteMeasure], cfg: SmoothingConfig, seed_path,
        common_noise: bool = False, noise_x=None, noise_y=None) -> float:
    """Value-only version of :func:`estimate_swd` (same noise, same number)."""
    mu, nu = _augment_pair(x, y, cfg, seed_path, common_noise, noise_x, noise_y)
    return max(transport_cost(mu, nu, cfg.p), 0.0) ** (1.0 / cfg.p)


def barycentric_potential(duals: ot.DualPotentials, origin_index, side: str = "source") -> np.ndarray:
    """Average a dual potential over the noise children of each original point."""
    if side in ("source", "x", "g"):
        vals = duals.g
    elif side in ("target", "y", "gc"):
        vals = duals.gc
    else:
        raise ConfigurationError(f"unknown side {side!r}")
    if origin_index is None:
        raise ConfigurationError("missing origin mapping")
    origin = np.asarray(origin_index, dtype=np.int64)
    if origin.shape[0] != vals.shape[0]:
        raise ConfigurationError("origin mapping does not cover the dual vector")
    counts = np.bincount(origin)
    if np.any(counts == 0):
        raise ConfigurationError("origin mapping skips some original points")
    return np.bincount(origin, weights=vals) / counts


def plugin_variance(est: SmoothDistanceEstimate, mode: str = "one_sample") -> VarianceEstimate:
    """Plug-in asymptotic variance Var(g*phi) / (p^2 W^(2(p-1))).

    ``two_sample`` adds the partner-potential term.  Raises
    :class:`DegenerateNullError` when the estimate is essentially zero.
    """
    if mode not in ("one_sample", "two_sample"):
        raise ConfigurationError("mode must be one_sample or two_sample")
    if not est.value_wp > DEGENERATE_TOL:
        raise DegenerateNullError("plug-in variance is undefined when the distance is ~0")
    p = est.cfg.p
    gbar = barycentric_potential(est.duals, est.origin_maps[0], "source")
    comps = [float(np.var(gbar, ddof=1)) if gbar.size > 1 else 0.0]
    if mode == "two_sample":
        hbar = barycentric_potential(est.duals, est.origin_maps[1], "target")
        comps.append(float(np.var(hbar, ddof=1)) if hbar.size > 1 else 0.0)
    denom = p * p * est.value_wp ** (2.0 * (p - 1.0))
    return VarianceEstimate(math.fsum(comps) / denom, tuple(comps), denom, mode)
