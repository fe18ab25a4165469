"""Experiment configurations and the replicate tasks behind ``experiment run``.

A config is JSON ``{command, params, master_seed, R, parallelism, out}``.
Replicate r of an experiment runs with ``SeedPath(master_seed).child("rep", r)``
and returns one row; rows are written in replicate order, so the CSV does
not depend on the degree of parallelism.
"""
from __future__ import annotations

import functools
import hashlib
import json
import math
import os
import warnings
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import ConfigurationError
from .estimator import dense_reference, default_dense_size, swd
from .inference import (BOOTSTRAPS, confidence_interval, equality_test, quantile)
from .measures import DistributionSpec, SmoothingConfig, sample
from .mde import MdeOptions, ParametricFamily, fit_mde, _value_task
from .reports import ReplicationReport, run_replicates
from .seeding import SeedPath
from . import sobolev

MAX_SEED = 2 ** 64


def spec_from(obj) -> DistributionSpec:
    if isinstance(obj, DistributionSpec):
        return obj
    if not isinstance(obj, dict):
        raise ConfigurationError(f"expected a distribution object, got {obj!r}")
    return DistributionSpec.from_json_dict(obj)


def cfg_from(params: dict) -> SmoothingConfig:
    try:
        return SmoothingConfig(float(params.get("p", 2.0)), float(params["sigma"]),
                               int(params.get("m", 32)))
    except KeyError as exc:
        raise ConfigurationError(f"missing parameter {exc}") from None


def family_from(params: dict) -> ParametricFamily:
    fam = params.get("family", "gaussian_location")
    return ParametricFamily(fam, tuple(params["lower"]), tuple(params["upper"]),
                            int(params.get("dim", 1)), float(params.get("scale", 1.0)),
                            float(params.get("width", 1.0)))


# A dense reference is shared by every replicate of an experiment; cache it per process.
_DENSE_CACHE: dict = {}


def _dense(spec_obj, cfg, n_dense, m_dense, root: SeedPath):
    key = (json.dumps(spec_obj, sort_keys=True), cfg.p, cfg.sigma, cfg.m, n_dense, m_dense,
           root.key)
    if key not in _DENSE_CACHE:
        if len(_DENSE_CACHE) > 4:
            _DENSE_CACHE.clear()
        _DENSE_CACHE[key] = dense_reference(spec_from(spec_obj), cfg, n_dense,
                                            root.child("dense"), m_dense)
    return _DENSE_CACHE[key]


def _data(params, sp):
    n = int(params["n"])
    x = sample(spec_from(params["mu"]), n, sp.child("x"))
    y = sample(spec_from(params["nu"]), n, sp.child("y")) if "nu" in params else None
    return n, x, y


# --- replicate tasks: (params, root, r, sp) -> row ---------------------------------

def task_estimate(params, root, r, sp):
    """sqrt(n) W between fresh samples; ``nu_known`` compares against a dense reference."""
    cfg = cfg_from(params)
    n, x, y = _data(params, sp)
    if params.get("nu_known"):
        nu_obj = params.get("nu", params["mu"])
        target = _dense(nu_obj, cfg, int(params.get("n_dense", default_dense_size(n))),
                        params.get("m_dense"), root)
    else:
        target = y
    w = swd(x, target, cfg, sp.child("noise"), common_noise=bool(params.get("common_noise")))
    row = {"value_wp": w, "scaled": math.sqrt(n) * w}
    if "reference" in params:
        row["centered"] = math.sqrt(n) * (w - float(params["reference"]))
    return row


def task_bootstrap(params, root, r, sp):
    """One data set, one bootstrap law; records its mean, variance and a few quantiles."""
    cfg = cfg_from(params)
    scheme = params.get("scheme", "one_sample_null")
    if scheme not in BOOTSTRAPS:
        raise ConfigurationError(f"unknown bootstrap scheme {scheme!r}")
    n, x, y = _data(params, sp)
    B, m = int(params.get("B", 500)), params.get("bootstrap_m")
    if scheme == "one_sample_null":
        dist = BOOTSTRAPS[scheme](x, cfg, B, sp.child("boot"), m)
    elif scheme == "one_sample_alt":
        nu = _dense(params["nu"], cfg, int(params.get("n_dense", default_dense_size(n))),
                    params.get("m_dense"), root)
        dist = BOOTSTRAPS[scheme](x, nu, cfg, B, sp.child("boot"), m)
    else:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            dist = BOOTSTRAPS[scheme](x, y, cfg, B, sp.child("boot"), m)
    v = dist.values
    return {"mean": float(np.mean(v)), "var": float(np.var(v, ddof=1)) if B > 1 else 0.0,
            "q05": quantile(dist, 0.05), "q50": quantile(dist, 0.5), "q95": quantile(dist, 0.95)}


def task_ci(params, root, r, sp):
    cfg = cfg_from(params)
    n, x, y = _data(params, sp)
    ci = confidence_interval(x, y, cfg, float(params.get("alpha", 0.05)),
                             int(params.get("B", 500)), sp.child("ci"), params.get("bootstrap_m"))
    row = {"lo": ci.lo, "hi": ci.hi, "estimate": ci.estimate}
    if "target" in params:
        row["covers"] = ci.contains(float(params["target"]))
    return row


def task_test2(params, root, r, sp):
    cfg = cfg_from(params)
    n, x, y = _data(params, sp)
    res = equality_test(x, y, cfg, float(params.get("alpha", 0.1)), int(params.get("B", 500)),
                        sp.child("test"), m=params.get("bootstrap_m"))
    return {"statistic": res.statistic, "critical_value": res.critical_value,
            "p_value": res.p_value, "reject": res.reject}


def _grid_from(params, spec, cfg):
    g = params.get("grid", {})
    nodes = int(g.get("nodes", 512))
    if "low" in g:
        return sobolev.Grid.covering(g["low"], g["high"], nodes, g.get("boundary", "zero_flux"))
    return sobolev.covering_grid(spec, cfg.sigma, nodes)


_RHO_CACHE: dict = {}


def task_null_sim(params, root, r, sp):
    cfg = cfg_from(params)
    spec = spec_from(params["mu"])
    key = (json.dumps(params["mu"], sort_keys=True), json.dumps(params.get("grid", {}),
                                                               sort_keys=True), cfg.sigma)
    if key not in _RHO_CACHE:
        _RHO_CACHE.clear()
        _RHO_CACHE[key] = sobolev.project_to_grid(spec, cfg.sigma, _grid_from(params, spec, cfg))
    rho = _RHO_CACHE[key]
    n_s = int(params.get("n_surrogate", 2000))
    if n_s < 1000:
        raise ConfigurationError("n_surrogate must be at least 1000")
    return {"value": sobolev.null_limit_draw(spec, rho, cfg, n_s, sp)}


def task_compare_sobolev(params, root, r, sp):
    p = float(params.get("p", 2.0))
    nodes = int(params.get("nodes", 200))
    grid = sobolev.Grid.covering([0.0], [1.0], nodes)
    rng = sp.rng()
    amp = float(params.get("amplitude", 1.0))
    rho = sobolev.random_smooth_density(grid, rng, amplitude=amp)
    mu0 = sobolev.random_smooth_density(grid, rng, amplitude=amp)
    mu1 = sobolev.random_smooth_density(grid, rng, amplitude=amp)
    rep = sobolev.verify_comparison(rho, mu0, mu1, p, int(params.get("max_atoms", 400)))
    return {"lhs": rep.lhs, "rhs": rep.rhs, "c0": rep.c0, "c1": rep.c1,
            "dual_norm": rep.dual_norm, "holds": rep.holds}


def task_mde(params, root, r, sp):
    fam = family_from(params)
    cfg = cfg_from(params)
    n = int(params["n"])
    theta_star = np.atleast_1d(np.asarray(params["theta_star"], dtype=float))
    x = sample(fam.spec(theta_star), n, sp.child("data"))
    opts = MdeOptions(ftol=float(params.get("ftol", 1e-4 / math.sqrt(n))),
                      xtol=float(params.get("xtol", 1e-4)))
    res = fit_mde(x, fam, cfg, params.get("n_model"), opts, sp.child("fit"))
    row = {f"theta_{k}": float(t) for k, t in enumerate(res.theta_hat)}
    row.update({f"z_{k}": math.sqrt(n) * (float(t) - theta_star[k])
                for k, t in enumerate(res.theta_hat)})
    row["value"] = res.value
    row["converged"] = res.converged
    return row


def task_mde_value(params, root, r, sp):
    n = int(params["n"])
    opts = MdeOptions(ftol=float(params.get("ftol", 1e-4 / math.sqrt(n))))
    return _value_task(family_from(params), np.atleast_1d(params["theta_star"]),
                       cfg_from(params), n, opts, r, sp)


COMMANDS = {
    "estimate": (task_estimate, ()),
    "bootstrap": (task_bootstrap, ()),
    "ci": (task_ci, ()),
    "test2": (task_test2, ()),
    "null-sim": (task_null_sim, ()),
    "compare-sobolev": (task_compare_sobolev, ()),
    "mde": (task_mde, ("z_0",)),
    "mde-value": (task_mde_value, ()),
}


@dataclass(frozen=True)
class ExperimentConfig:
    command: str
    params: dict
    master_seed: int
    R: int = 1
    parallelism: int = 1
    out: Optional[str] = None

    def __post_init__(self):
        if self.command not in COMMANDS:
            raise ConfigurationError(f"unknown command {self.command!r}; "
                                     f"choose from {sorted(COMMANDS)}")
        if not isinstance(self.params, dict):
            raise ConfigurationError("params must be an object")
        for name in ("master_seed", "R", "parallelism"):
            v = getattr(self, name)
            if isinstance(v, bool) or not isinstance(v, (int, np.integer)):
                raise ConfigurationError(f"{name} must be an integer")
        if not -MAX_SEED // 2 <= self.master_seed < MAX_SEED:
            raise ConfigurationError("master_seed must fit in 64 bits")
        if self.R < 1 or self.parallelism < 1:
            raise ConfigurationError("R and parallelism must be positive")
        for key in ("mu", "nu"):
            if key in self.params:
                spec_from(self.params[key])
        for key in ("n", "B", "n_surrogate", "n_dense", "bootstrap_m", "m_dense"):
            v = self.params.get(key)
            if v is not None and (isinstance(v, bool) or not isinstance(v, int) or v < 1):
                raise ConfigurationError(f"params.{key} must be a positive integer")
        if "sigma" in self.params:
            cfg_from(self.params)

    @classmethod
    def from_dict(cls, obj: dict) -> "ExperimentConfig":
        if not isinstance(obj, dict):
            raise ConfigurationError("config must be a JSON object")
        unknown = set(obj) - {"command", "params", "master_seed", "R", "parallelism", "out"}
        if unknown:
            raise ConfigurationError(f"unknown config keys {sorted(unknown)}")
        try:
            return cls(obj["command"], dict(obj.get("params", {})), obj["master_seed"],
                       obj.get("R", 1), obj.get("parallelism", 1), obj.get("out"))
        except KeyError as exc:
            raise ConfigurationError(f"config is missing {exc}") from None

    @classmethod
    def load(cls, path: str) -> "ExperimentConfig":
        try:
            with open(path, encoding="utf-8") as fh:
                obj = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigurationError(f"cannot read config {path}: {exc}") from None
        return cls.from_dict(obj)

    def to_dict(self) -> dict:
        return {"command": self.command, "params": self.params, "master_seed": self.master_seed,
                "R": self.R, "parallelism": self.parallelism, "out": self.out}

    def config_hash(self) -> str:
        """sha256 of the canonical JSON of everything that affects the rows."""
        body = {"command": self.command, "params": self.params,
                "master_seed": self.master_seed, "R": self.R}
        text = json.dumps(body, sort_keys=True, separators=(",", ":"), ensure_ascii=True)
        return hashlib.sha256(text.encode("ascii")).hexdigest()


def run_experiment(cfg: ExperimentConfig) -> ReplicationReport:
    """Run all replicates; write ``<out>/<command>_rows.csv`` and the summary JSON if ``out`` is set."""
    task_fn, normal_cols = COMMANDS[cfg.command]
    root = SeedPath(int(cfg.master_seed))
    task = functools.partial(task_fn, cfg.params, root)
    report = run_replicates(task, cfg.R, root, cfg.parallelism, normal_columns=normal_cols,
                            metadata={"command": cfg.command, "config_hash": cfg.config_hash()})
    if cfg.out:
        report.write(cfg.out, cfg.command.replace("-", "_"))
    return report
