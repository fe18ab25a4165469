"""Replication bookkeeping: ordered parallel execution, CSV rows, reproducible summaries."""
from __future__ import annotations

import csv
import io
import json
import math
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np
from scipy import special

from .errors import ConfigurationError
from .seeding import SeedPath, as_seed_path

THREADS_ENV = "SMOOTHWASS_THREADS"
SUMMARY_QUANTILES = (0.05, 0.25, 0.5, 0.75, 0.95)


def ks_two_sample(a: Sequence[float], b: Sequence[float]) -> float:
    """sup_t |F_a(t) - F_b(t)| for the two empirical CDFs."""
    a = np.sort(np.asarray(a, dtype=float).ravel())
    b = np.sort(np.asarray(b, dtype=float).ravel())
    if a.size == 0 or b.size == 0:
        raise ConfigurationError("KS distance needs two nonempty samples")
    t = np.concatenate([a, b])
    fa = np.searchsorted(a, t, side="right") / a.size
    fb = np.searchsorted(b, t, side="right") / b.size
    return float(np.max(np.abs(fa - fb)))


def ks_normal(values: Sequence[float], mean: float = 0.0, sd: Optional[float] = None) -> float:
    """KS distance between the empirical CDF of ``values`` and N(mean, sd^2).

    ``sd`` defaults to the sample standard deviation (ddof = 1).
    """
    v = np.sort(np.asarray(values, dtype=float).ravel())
    n = v.size
    if n < 2:
        raise ConfigurationError("need at least two values")
    if sd is None:
        sd = float(np.std(v, ddof=1))
    if not sd > 0:
        return 1.0
    F = special.ndtr((v - mean) / sd)
    i = np.arange(1, n + 1)
    return float(max(np.max(i / n - F), np.max(F - (i - 1) / n)))


def effective_parallelism(requested: int) -> int:
    cap = os.environ.get(THREADS_ENV)
    p = max(1, int(requested))
    if cap:
        try:
            p = min(p, max(1, int(cap)))
        except ValueError:
            raise ConfigurationError(f"{THREADS_ENV} must be an integer") from None
    return p


def _format(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return "" if v is None else str(v)


def rows_to_csv(rows: list) -> str:
    columns = []
    for row in rows:
        for k in row:
            if k not in columns:
                columns.append(k)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for row in rows:
        w.writerow([_format(row.get(c)) for c in columns])
    return buf.getvalue()


def _numeric_columns(rows):
    cols = []
    for row in rows:
        for k, v in row.items():
            if k in ("replicate",) or k in cols:
                continue
            if isinstance(v, (float, np.floating)) or (isinstance(v, (int, np.integer))
                                                      and not isinstance(v, (bool, np.bool_))):
                cols.append(k)
    return cols


def summarize(rows: list, normal_columns: Sequence[str] = ()) -> dict:
    """Per-column n, mean, variance, extremes and lower empirical quantiles.

    Sums use ``math.fsum`` so the block is bit-reproducible from the rows.
    Columns listed in ``normal_columns`` also get ``ks_normal``: the KS
    distance to N(0, s^2), s the sample standard deviation.
    """
    out = {}
    ok = [r for r in rows if not r.get("error")]
    for col in _numeric_columns(ok):
        vals = [float(r[col]) for r in ok if r.get(col) is not None]
        if not vals:
            continue
        n = len(vals)
        mean = math.fsum(vals) / n
        var = math.fsum((v - mean) ** 2 for v in vals) / (n - 1) if n > 1 else 0.0
        srt = sorted(vals)
        entry = {"n": n, "mean": mean, "var": var, "min": srt[0], "max": srt[-1],
                 "quantiles": {repr(q): srt[min(max(math.ceil(q * n - 1e-9) - 1, 0), n - 1)]
                               for q in SUMMARY_QUANTILES}}
        if col in normal_columns and n > 1:
            entry["ks_normal"] = ks_normal(vals, 0.0, math.sqrt(var))
            entry["mean_se"] = math.sqrt(var / n)
        out[col] = entry
    return out


@dataclass
class ReplicationReport:
    rows: list
    summary: dict
    metadata: dict = field(default_factory=dict)
    normal_columns: tuple = ()

    @property
    def partial(self) -> bool:
        return bool(self.metadata.get("partial"))

    def column(self, name: str) -> np.ndarray:
        return np.array([r[name] for r in self.rows if not r.get("error")], dtype=float)

    def rows_csv(self) -> str:
        return rows_to_csv(self.rows)

    def summary_json(self) -> str:
        return json.dumps({"summary": self.summary, "metadata": self.metadata}, sort_keys=True,
                          indent=2)

    def recompute_summary(self) -> dict:
        return summarize(self.rows, self.normal_columns)

    def write(self, out_dir: str, stem: str = "report") -> tuple:
        os.makedirs(out_dir, exist_ok=True)
        csv_path = os.path.join(out_dir, f"{stem}_rows.csv")
        json_path = os.path.join(out_dir, f"{stem}_summary.json")
        with open(csv_path, "w", newline="", encoding="utf-8") as fh:
            fh.write(self.rows_csv())
        with open(json_path, "w", encoding="utf-8") as fh:
            fh.write(self.summary_json())
        return csv_path, json_path


def _call(task, r, seed_path):
    try:
        row = task(r, seed_path.child("rep", r))
        return {"replicate": r, "seed": seed_path.child("rep", r).key, **row}
    except Exception as exc:  # recorded, report marked partial
        return {"replicate": r, "seed": seed_path.child("rep", r).key,
                "error": f"{type(exc).__name__}: {exc}"}


def run_replicates(task: Callable, R: int, seed_path, parallelism: int = 1,
                   normal_columns: Sequence[str] = (), metadata: Optional[dict] = None
                   ) -> ReplicationReport:
    """Run ``task(r, seed_path.child("rep", r)) -> dict`` for r < R, ordered by r.

    ``task`` must be picklable when ``parallelism > 1``.
    """
    if not isinstance(R, (int, np.integer)) or R < 1:
        raise ConfigurationError("R must be a positive integer")
    seed_path = as_seed_path(seed_path)
    workers = effective_parallelism(parallelism)
    t0 = time.perf_counter()
    if workers == 1 or R == 1:
        rows = [_call(task, r, seed_path) for r in range(R)]
    else:
        with ProcessPoolExecutor(max_workers=min(workers, R)) as ex:
            rows = list(ex.map(_call, [task] * R, range(R), [seed_path] * R,
                               chunksize=max(1, R // (4 * workers))))
    failures = sum(1 for r in rows if r.get("error"))
    meta = dict(metadata or {})
    meta.update({"R": int(R), "failures": failures, "partial": failures > 0,
                 "wall_time_s": time.perf_counter() - t0, "seed_path": str(seed_path)})
    from . import __version__
    meta.setdefault("version", __version__)
    return ReplicationReport(rows, summarize(rows, normal_columns), meta, tuple(normal_columns))
