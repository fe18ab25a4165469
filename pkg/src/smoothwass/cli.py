"""Command-line entry point: ``smoothwass <subcommand> ...``.

Exit codes: 0 success, 2 invalid input or configuration, 3 partial failure
(some replicates raised).
"""
from __future__ import annotations

import argparse
import json
import math
import sys
import warnings

import numpy as np

from .errors import ConfigurationError, DegenerateNullError, GridTooSmallError, SolverError
from .estimator import estimate_swd, plugin_variance
from .harness import COMMANDS, ExperimentConfig, cfg_from, run_experiment, spec_from
from .inference import BOOTSTRAPS, confidence_interval, equality_test
from .measures import Sample, SmoothingConfig, sample
from .mde import MdeOptions, ParametricFamily, fit_mde
from .seeding import SeedPath
from . import sobolev

EXIT_OK, EXIT_INVALID, EXIT_PARTIAL = 0, 2, 3


def _json_arg(text):
    """Inline JSON or a path to a JSON file."""
    if text.lstrip().startswith(("{", "[")):
        return json.loads(text)
    with open(text, encoding="utf-8") as fh:
        return json.load(fh)


def _emit(text, path):
    if path:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(text if text.endswith("\n") else text + "\n")
    else:
        sys.stdout.write(text if text.endswith("\n") else text + "\n")


def _smoothing(a) -> SmoothingConfig:
    return SmoothingConfig(a.p, a.sigma, a.m)


def _load_sample(csv_path, spec_text, n, seed, label):
    if csv_path:
        return Sample.from_csv(csv_path)
    if spec_text is None:
        raise ConfigurationError(f"give --{label} (CSV) or --{label}-spec with --n")
    if n is None:
        raise ConfigurationError("--n is required when sampling from a spec")
    return sample(spec_from(_json_arg(spec_text)), n, SeedPath(seed).child("data", label))


def _add_smoothing(p):
    p.add_argument("--p", type=float, default=2.0)
    p.add_argument("--sigma", type=float, required=True)
    p.add_argument("--m", type=int, default=32, help="noise copies per point")
    p.add_argument("--seed", type=int, default=0, help="master seed")


def _add_data(p, two=True):
    p.add_argument("--x", help="CSV of the first sample")
    p.add_argument("--x-spec", help="distribution JSON (inline or file) to sample x from")
    if two:
        p.add_argument("--y", help="CSV of the second sample")
        p.add_argument("--y-spec", help="distribution JSON to sample y from")
    p.add_argument("--n", type=int, help="sample size when drawing from specs")


def cmd_estimate(a):
    cfg = _smoothing(a)
    x = _load_sample(a.x, a.x_spec, a.n, a.seed, "x")
    y = _load_sample(a.y, a.y_spec, a.n, a.seed, "y")
    est = estimate_swd(x, y, cfg, SeedPath(a.seed).child("estimate"), a.common_noise)
    out = est.to_json_dict()
    if a.variance:
        out["variance"] = plugin_variance(est, a.variance).to_json_dict()
    if a.plan_out:
        _emit(est.plan.to_csv(), a.plan_out)
    _emit(json.dumps(out, sort_keys=True), a.out)
    return EXIT_OK


def cmd_bootstrap(a):
    if a.scheme == "naive_null" and not a.naive_null:
        raise ConfigurationError("the naive_null scheme is inconsistent; pass --naive-null "
                                 "to run it anyway")
    if a.naive_null:
        a.scheme = "naive_null"
        print("warning: naive two-sample null bootstrap is NOT consistent; "
              "for demonstration only", file=sys.stderr)
    cfg = _smoothing(a)
    x = _load_sample(a.x, a.x_spec, a.n, a.seed, "x")
    sp = SeedPath(a.seed).child("bootstrap")
    m = a.bootstrap_m
    if a.scheme == "one_sample_null":
        dist = BOOTSTRAPS[a.scheme](x, cfg, a.B, sp, m)
    else:
        y = _load_sample(a.y, a.y_spec, a.n, a.seed, "y")
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            dist = BOOTSTRAPS[a.scheme](x, y, cfg, a.B, sp, m)
    _emit(dist.to_csv(), a.out)
    return EXIT_OK


def cmd_ci(a):
    cfg = _smoothing(a)
    x = _load_sample(a.x, a.x_spec, a.n, a.seed, "x")
    y = _load_sample(a.y, a.y_spec, a.n, a.seed, "y")
    ci = confidence_interval(x, y, cfg, a.alpha, a.B, SeedPath(a.seed).child("ci"),
                             a.bootstrap_m)
    _emit(ci.to_json(), a.out)
    return EXIT_OK


def cmd_test2(a):
    cfg = _smoothing(a)
    x = _load_sample(a.x, a.x_spec, a.n, a.seed, "x")
    y = _load_sample(a.y, a.y_spec, a.n, a.seed, "y")
    res = equality_test(x, y, cfg, a.alpha, a.B, SeedPath(a.seed).child("test"),
                        m=a.bootstrap_m)
    _emit(res.to_json(), a.out)
    return EXIT_OK


def cmd_null_sim(a):
    cfg = _smoothing(a)
    spec = spec_from(_json_arg(a.mu_spec))
    grid = sobolev.covering_grid(spec, cfg.sigma, a.nodes)
    vals = sobolev.simulate_null_limit(spec, cfg, grid, a.n_surrogate, a.R,
                                       SeedPath(a.seed).child("null-sim"))
    _emit("value\n" + "".join(f"{v!r}\n" for v in vals), a.out)
    return EXIT_OK


def cmd_compare_sobolev(a):
    from .harness import task_compare_sobolev
    root = SeedPath(a.seed)
    params = {"p": a.p, "nodes": a.nodes, "amplitude": a.amplitude}
    rows = [task_compare_sobolev(params, root, r, root.child("rep", r)) for r in range(a.pairs)]
    out = {"pairs": a.pairs, "p": a.p, "all_hold": all(r["holds"] for r in rows),
           "max_ratio": max(r["lhs"] / r["rhs"] for r in rows)}
    _emit(json.dumps(out, sort_keys=True), a.out)
    return EXIT_OK


def cmd_mde(a):
    cfg = _smoothing(a)
    fam = ParametricFamily(a.family, tuple(a.lower), tuple(a.upper), a.dim)
    if a.x:
        x = Sample.from_csv(a.x)
    else:
        if a.theta_star is None or a.n is None:
            raise ConfigurationError("give --x, or --theta-star with --n to simulate data")
        x = sample(fam.spec(a.theta_star), a.n, SeedPath(a.seed).child("data", "x"))
    ftol = a.ftol if a.ftol is not None else 1e-4 / math.sqrt(x.n)
    res = fit_mde(x, fam, cfg, a.n_model, MdeOptions(xtol=a.xtol, ftol=ftol),
                  SeedPath(a.seed).child("fit"))
    _emit(res.to_json(), a.out)
    return EXIT_OK


def _coerce(text):
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        return text


def cmd_experiment(a):
    obj = _json_arg(a.config)
    if not isinstance(obj, dict):
        raise ConfigurationError("config must be a JSON object")
    obj = dict(obj)
    obj["params"] = dict(obj.get("params", {}))
    for flag, key in (("R", "R"), ("parallelism", "parallelism"), ("master_seed", "master_seed"),
                      ("out", "out")):
        val = getattr(a, flag)
        if val is not None:
            obj[key] = val
    for item in a.set or []:
        if "=" not in item:
            raise ConfigurationError(f"--set expects key=value, got {item!r}")
        k, v = item.split("=", 1)
        obj["params"][k] = _coerce(v)
    if a.bootstrap_m is not None:
        obj["params"]["bootstrap_m"] = a.bootstrap_m
    if a.naive_null:
        print("warning: naive two-sample null bootstrap is NOT consistent; "
              "for demonstration only", file=sys.stderr)
        obj["params"]["scheme"] = "naive_null"
    cfg = ExperimentConfig.from_dict(obj)
    report = run_experiment(cfg)
    if not cfg.out:
        sys.stdout.write(report.rows_csv())
    if report.partial:
        print(f"{report.metadata['failures']} of {cfg.R} replicates failed", file=sys.stderr)
        return EXIT_PARTIAL
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="smoothwass", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("estimate", help="point estimate of the smooth distance")
    _add_data(p)
    _add_smoothing(p)
    p.add_argument("--common-noise", action="store_true")
    p.add_argument("--variance", choices=["one_sample", "two_sample"])
    p.add_argument("--plan-out", help="write the transport plan CSV here")
    p.add_argument("--out")
    p.set_defaults(func=cmd_estimate)

    p = sub.add_parser("bootstrap", help="bootstrap distribution as a one-column CSV")
    _add_data(p)
    _add_smoothing(p)
    p.add_argument("--scheme", default="one_sample_null",
                   choices=[s for s in BOOTSTRAPS if s != "one_sample_alt"])
    p.add_argument("--B", type=int, default=500)
    p.add_argument("--bootstrap-m", type=int)
    p.add_argument("--naive-null", action="store_true",
                   help="run the inconsistent naive two-sample null bootstrap")
    p.add_argument("--out")
    p.set_defaults(func=cmd_bootstrap)

    for name, fn, alpha in (("ci", cmd_ci, 0.05), ("test2", cmd_test2, 0.1)):
        p = sub.add_parser(name, help="confidence interval" if name == "ci"
                           else "two-sample equality test")
        _add_data(p)
        _add_smoothing(p)
        p.add_argument("--alpha", type=float, default=alpha)
        p.add_argument("--B", type=int, default=500)
        p.add_argument("--bootstrap-m", type=int)
        p.add_argument("--out")
        p.set_defaults(func=fn)

    p = sub.add_parser("null-sim", help="surrogate draws of the null limit law")
    p.add_argument("--mu-spec", required=True)
    _add_smoothing(p)
    p.add_argument("--nodes", type=int, default=512)
    p.add_argument("--n-surrogate", type=int, default=2000)
    p.add_argument("--R", type=int, default=400)
    p.add_argument("--out")
    p.set_defaults(func=cmd_null_sim)

    p = sub.add_parser("compare-sobolev", help="check the W_p / dual-norm comparison on random pairs")
    p.add_argument("--p", type=float, default=2.0)
    p.add_argument("--pairs", type=int, default=100)
    p.add_argument("--nodes", type=int, default=200)
    p.add_argument("--amplitude", type=float, default=1.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out")
    p.set_defaults(func=cmd_compare_sobolev)

    p = sub.add_parser("mde", help="minimum smooth-distance estimate")
    p.add_argument("--x")
    p.add_argument("--theta-star", type=float, nargs="+")
    p.add_argument("--n", type=int)
    p.add_argument("--family", default="gaussian_location",
                   choices=["gaussian_location", "gaussian_location_scale", "uniform_location"])
    p.add_argument("--lower", type=float, nargs="+", required=True)
    p.add_argument("--upper", type=float, nargs="+", required=True)
    p.add_argument("--dim", type=int, default=1)
    p.add_argument("--n-model", type=int)
    p.add_argument("--xtol", type=float, default=1e-4)
    p.add_argument("--ftol", type=float)
    _add_smoothing(p)
    p.add_argument("--out")
    p.set_defaults(func=cmd_mde)

    p = sub.add_parser("experiment", help="replicated experiments from a JSON config")
    esub = p.add_subparsers(dest="action", required=True)
    r = esub.add_parser("run", help=f"run a config; commands: {', '.join(sorted(COMMANDS))}")
    r.add_argument("config", help="JSON config file (or inline JSON)")
    r.add_argument("--R", type=int)
    r.add_argument("--parallelism", type=int)
    r.add_argument("--master-seed", dest="master_seed", type=int)
    r.add_argument("--out")
    r.add_argument("--set", action="append", metavar="KEY=VALUE",
                   help="override a params entry (value parsed as JSON when possible)")
    r.add_argument("--bootstrap-m", type=int)
    r.add_argument("--naive-null", action="store_true")
    r.set_defaults(func=cmd_experiment)
    return ap


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ConfigurationError, DegenerateNullError, GridTooSmallError, json.JSONDecodeError,
            OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except SolverError as exc:
        print(f"solver error: {exc}", file=sys.stderr)
        return EXIT_PARTIAL


if __name__ == "__main__":
    sys.exit(main())
