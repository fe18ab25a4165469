"""Minimum smooth-Wasserstein distance estimation over simple parametric families.

The objective theta -> W(x, nu_theta) is evaluated with common random
numbers: the model sample is one frozen base draw pushed through theta, and
both noise tensors are frozen, so the objective is a deterministic,
piecewise smooth function of theta that Nelder-Mead can handle.
"""
from __future__ import annotations

import functools
import json
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy import optimize
from scipy.stats import qmc

from .errors import ConfigurationError
from .estimator import transport_cost
from .measures import (DistributionSpec, Sample, SmoothingConfig, draw_noise, empirical,
                       gaussian, sample, smooth_augment, uniform_box)
from .reports import ReplicationReport, run_replicates
from .seeding import as_seed_path

FAMILIES = ("gaussian_location", "gaussian_location_scale", "uniform_location")


@dataclass(frozen=True)
class ParametricFamily:
    """A location (or location-scale) family on R^d with a compact parameter box.

    * gaussian_location: nu_theta = N(theta, scale^2 I), d0 = d
    * gaussian_location_scale: theta = (mean, s), nu_theta = N(mean, s^2 I), d0 = d + 1
    * uniform_location: nu_theta = theta + width * U[-1/2, 1/2]^d, d0 = d
    """

    family: str
    lower: tuple
    upper: tuple
    dim: int = 1
    scale: float = 1.0
    width: float = 1.0

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ConfigurationError(f"unknown parametric family {self.family!r}")
        lo = tuple(float(v) for v in np.atleast_1d(self.lower))
        hi = tuple(float(v) for v in np.atleast_1d(self.upper))
        object.__setattr__(self, "lower", lo)
        object.__setattr__(self, "upper", hi)
        if len(lo) != self.d0 or len(hi) != self.d0:
            raise ConfigurationError(f"theta box needs {self.d0} coordinates")
        if any(not b > a for a, b in zip(lo, hi)):
            raise ConfigurationError("theta box must have nonempty interior")
        if self.family == "gaussian_location_scale" and lo[-1] <= 0:
            raise ConfigurationError("scale coordinate of the box must be positive")
        if not (self.scale > 0 and self.width > 0):
            raise ConfigurationError("scale and width must be positive")

    @property
    def d0(self) -> int:
        return self.dim + (1 if self.family == "gaussian_location_scale" else 0)

    @property
    def box(self):
        return np.array(self.lower), np.array(self.upper)

    def contains(self, theta) -> bool:
        t = np.atleast_1d(theta)
        lo, hi = self.box
        return bool(np.all(t >= lo) and np.all(t <= hi))

    def spec(self, theta) -> DistributionSpec:
        t = np.atleast_1d(np.asarray(theta, dtype=float))
        if self.family == "gaussian_location":
            return gaussian(t, np.full(self.dim, self.scale))
        if self.family == "gaussian_location_scale":
            return gaussian(t[:-1], np.full(self.dim, t[-1]))
        return uniform_box(t - self.width / 2, t + self.width / 2)

    def base_draws(self, n: int, seed_path) -> np.ndarray:
        rng = as_seed_path(seed_path).rng()
        if self.family == "uniform_location":
            return rng.random((n, self.dim)) - 0.5
        return rng.standard_normal((n, self.dim))

    def transform(self, theta, base: np.ndarray) -> np.ndarray:
        t = np.atleast_1d(np.asarray(theta, dtype=float))
        if self.family == "gaussian_location":
            return t + self.scale * base
        if self.family == "gaussian_location_scale":
            return t[:-1] + t[-1] * base
        return t + self.width * base


@dataclass(frozen=True)
class MdeOptions:
    xtol: float = 1e-4
    ftol: float = 1e-6
    starts: int = 5
    max_iter: int = 400
    simplex_fraction: float = 0.1


@dataclass
class MdeResult:
    theta_hat: np.ndarray
    value: float
    optimizer_trace: list
    converged: bool
    starts: list = field(default_factory=list)

    @property
    def best_so_far(self) -> np.ndarray:
        return np.minimum.accumulate(np.array([v for _, v in self.optimizer_trace]))

    def to_json(self) -> str:
        return json.dumps({"theta_hat": np.asarray(self.theta_hat).tolist(), "value": self.value,
                           "converged": self.converged,
                           "n_evaluations": len(self.optimizer_trace)}, sort_keys=True)


class MdeObjective:
    """theta -> W_p^{(sigma)}(x, nu_theta) under frozen base draws and noise."""

    def __init__(self, x: Sample, fam: ParametricFamily, cfg: SmoothingConfig,
                 n_model: Optional[int], seed_path):
        if x.dim != fam.dim:
            raise ConfigurationError("sample dimension does not match the family")
        seed_path = as_seed_path(seed_path)
        self.fam, self.cfg = fam, cfg
        self.n_model = x.n if n_model is None else int(n_model)
        self.base = fam.base_draws(self.n_model, seed_path.child("base"))
        self.noise_model = draw_noise(self.n_model, cfg.m, fam.dim, seed_path.child("noise_model"))
        self.data = smooth_augment(empirical(x), cfg, seed_path.child("noise_data"))
        self.lo, self.hi = fam.box
        self.trace = []

    def __call__(self, theta) -> float:
        theta = np.clip(np.asarray(theta, dtype=float), self.lo, self.hi)
        model = Sample(self.fam.transform(theta, self.base))
        nu = smooth_augment(empirical(model), self.cfg, None, self.noise_model)
        val = max(transport_cost(self.data, nu, self.cfg.p), 0.0) ** (1.0 / self.cfg.p)
        self.trace.append((theta.copy(), val))
        return val


def _start_points(fam: ParametricFamily, S: int, seed_path) -> np.ndarray:
    lo, hi = fam.box
    seed = int.from_bytes(as_seed_path(seed_path).digest[:8], "little")
    pts = qmc.Halton(d=fam.d0, scramble=True, seed=seed).random(S)
    return lo + pts * (hi - lo)


def _initial_simplex(x0, lo, hi, frac):
    d = x0.size
    sim = np.tile(x0, (d + 1, 1))
    for i in range(d):
        step = frac * (hi[i] - lo[i])
        sim[i + 1, i] = x0[i] + step if x0[i] + step <= hi[i] else x0[i] - step
    return sim


def fit_mde(x: Sample, fam: ParametricFamily, cfg: SmoothingConfig,
            n_model: Optional[int] = None, opts: Optional[MdeOptions] = None,
            seed_path=0) -> MdeResult:
    """Multi-start bounded Nelder-Mead on the frozen-randomness objective.

    Out-of-box vertices are clipped to the box.  A start counts as converged
    when its final simplex lies within ``opts.xtol`` of its best vertex;
    the result is converged if the winning start is.
    """
    opts = opts or MdeOptions()
    seed_path = as_seed_path(seed_path)
    obj = MdeObjective(x, fam, cfg, n_model, seed_path)
    lo, hi = fam.box
    best = None
    starts = []
    for x0 in _start_points(fam, opts.starts, seed_path.child("starts")):
        res = optimize.minimize(
            obj, x0, method="Nelder-Mead", bounds=list(zip(lo, hi)),
            options={"xatol": opts.xtol, "fatol": opts.ftol, "maxiter": opts.max_iter,
                     "initial_simplex": _initial_simplex(x0, lo, hi, opts.simplex_fraction)})
        sim = res.final_simplex[0]
        radius = float(np.max(np.linalg.norm(sim - sim[0], axis=1)))
        ok = bool(res.status == 0 and radius <= opts.xtol)
        theta = np.clip(res.x, lo, hi)
        starts.append({"x0": x0.tolist(), "theta": theta.tolist(), "value": float(res.fun),
                       "converged": ok})
        if best is None or res.fun < best[1]:
            best = (theta, float(res.fun), ok)
    return MdeResult(best[0], best[1], obj.trace, best[2], starts)


def _limit_task(fam, theta_star, cfg, n, opts, r, sp):
    x = sample(fam.spec(theta_star), n, sp.child("data"))
    res = fit_mde(x, fam, cfg, None, opts, sp.child("fit"))
    row = {}
    for k, t in enumerate(np.atleast_1d(res.theta_hat)):
        row[f"theta_{k}"] = float(t)
        row[f"z_{k}"] = math.sqrt(n) * (float(t) - float(np.atleast_1d(theta_star)[k]))
    row["value"] = res.value
    row["converged"] = res.converged
    return row


def _value_task(fam, theta_star, cfg, n, opts, r, sp):
    x = sample(fam.spec(theta_star), n, sp.child("data"))
    res = fit_mde(x, fam, cfg, None, opts, sp.child("fit"))
    at_truth = MdeObjective(x, fam, cfg, None, sp.child("fit"))(theta_star)
    return {"scaled_value": math.sqrt(n) * res.value,
            "scaled_value_at_truth": math.sqrt(n) * at_truth,
            "converged": res.converged}


def _default_opts(n):
    return MdeOptions(ftol=1e-4 / math.sqrt(n))


def mde_limit_experiment(fam: ParametricFamily, theta_star, cfg: SmoothingConfig, n: int,
                         R: int, seed_path, opts: Optional[MdeOptions] = None,
                         parallelism: int = 1) -> ReplicationReport:
    """R fits on fresh data from nu_{theta*}; rows carry z_k = sqrt(n)(theta_hat_k - theta*_k)."""
    if not fam.contains(theta_star):
        raise ConfigurationError("theta_star must lie in the parameter box")
    opts = opts or _default_opts(n)
    task = functools.partial(_limit_task, fam, np.atleast_1d(theta_star), cfg, n, opts)
    cols = tuple(f"z_{k}" for k in range(fam.d0))
    return run_replicates(task, R, seed_path, parallelism, normal_columns=cols,
                          metadata={"experiment": "mde_limit", "n": n})


def mde_value_experiment(fam: ParametricFamily, theta_star, cfg: SmoothingConfig, n: int,
                         R: int, seed_path, opts: Optional[MdeOptions] = None,
                         parallelism: int = 1) -> ReplicationReport:
    """R replicates of sqrt(n) min_theta W(x, nu_theta), plus the value at theta*."""
    if not fam.contains(theta_star):
        raise ConfigurationError("theta_star must lie in the parameter box")
    opts = opts or _default_opts(n)
    task = functools.partial(_value_task, fam, np.atleast_1d(theta_star), cfg, n, opts)
    return run_replicates(task, R, seed_path, parallelism,
                          metadata={"experiment": "mde_value", "n": n})
