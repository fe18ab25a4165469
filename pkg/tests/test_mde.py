import json
import math

import numpy as np
import pytest

from smoothwass import (ConfigurationError, MdeOptions, ParametricFamily, Sample, SmoothingConfig,
                        fit_mde, mde_limit_experiment, mde_value_experiment, sample)
from smoothwass.mde import MdeObjective

CFG = SmoothingConfig(2, 0.5, 8)
LOC = ParametricFamily("gaussian_location", (-5,), (5,))


def test_family_validation():
    with pytest.raises(ConfigurationError):
        ParametricFamily("cauchy_location", (0,), (1,))
    with pytest.raises(ConfigurationError):
        ParametricFamily("gaussian_location", (1,), (1,))
    with pytest.raises(ConfigurationError):
        ParametricFamily("gaussian_location_scale", (0, -1), (1, 2))
    assert ParametricFamily("gaussian_location_scale", (0, 0.1), (1, 2)).d0 == 2


def test_transform_matches_spec_law():
    fam = ParametricFamily("uniform_location", (-1,), (1,), width=2.0)
    z = fam.transform(0.5, fam.base_draws(20_000, 0))
    assert z.min() >= -0.5 and z.max() <= 1.5 and abs(z.mean() - 0.5) < 0.02


def test_consistency_large_n():
    x = sample(LOC.spec(1.5), 5000, (1, "data"))
    res = fit_mde(x, LOC, CFG, seed_path=(1, "fit"))
    assert abs(res.theta_hat[0] - 1.5) <= 0.1


def test_value_not_above_truth():
    x = sample(LOC.spec(0.7), 200, 2)
    opts = MdeOptions(ftol=1e-6)
    res = fit_mde(x, LOC, CFG, opts=opts, seed_path=3)
    at_truth = MdeObjective(x, LOC, CFG, None, 3)(np.array([0.7]))
    assert res.value <= at_truth + opts.ftol


def test_determinism_and_box():
    x = sample(LOC.spec(4.9), 100, 4)
    a = fit_mde(x, LOC, CFG, seed_path=5)
    b = fit_mde(x, LOC, CFG, seed_path=5)
    assert np.array_equal(a.theta_hat, b.theta_hat)
    assert LOC.contains(a.theta_hat)
    assert all(LOC.contains(t) for t, _ in a.optimizer_trace)


def test_out_of_box_data_stays_in_box():
    fam = ParametricFamily("gaussian_location", (0,), (1,))
    res = fit_mde(sample(LOC.spec(3.0), 100, 6), fam, CFG, seed_path=7)
    assert abs(res.theta_hat[0] - 1.0) < 1e-3


def test_best_so_far_monotone():
    res = fit_mde(sample(LOC.spec(0.0), 100, 8), LOC, CFG, seed_path=9)
    assert np.all(np.diff(res.best_so_far) <= 0)
    assert res.value == pytest.approx(res.best_so_far[-1])
    assert json.loads(res.to_json())["n_evaluations"] == len(res.optimizer_trace)


def test_objective_shift_equivariance():
    x = sample(LOC.spec(0.2), 80, 10)
    c = 1.25
    f = MdeObjective(x, LOC, CFG, None, 11)
    g = MdeObjective(Sample(x.points + c), LOC, CFG, None, 11)
    for t in (-1.0, 0.0, 0.6):
        assert abs(f(np.array([t])) - g(np.array([t + c]))) <= 1e-9


def test_location_scale_recovery():
    fam = ParametricFamily("gaussian_location_scale", (-3, 0.2), (3, 4))
    x = sample(fam.spec([1.0, 2.0]), 1500, 12)
    res = fit_mde(x, fam, CFG, seed_path=13)
    assert np.allclose(res.theta_hat, [1.0, 2.0], atol=0.2)


def test_uniform_location_fit():
    fam = ParametricFamily("uniform_location", (-2,), (2,))
    res = fit_mde(sample(fam.spec(0.3), 800, 14), fam, CFG, seed_path=15)
    assert abs(res.theta_hat[0] - 0.3) < 0.1


def test_experiments_shapes():
    rep = mde_limit_experiment(LOC, 0.0, CFG, 50, 3, 16)
    assert len(rep.rows) == 3 and "z_0" in rep.rows[0]
    val = mde_value_experiment(LOC, 0.0, CFG, 50, 3, 17)
    assert len(val.rows) == 3
    for row in val.rows:
        assert row["scaled_value"] >= 0
        assert row["scaled_value"] <= row["scaled_value_at_truth"] + math.sqrt(50) * 1e-4 / math.sqrt(50)
    with pytest.raises(ConfigurationError):
        mde_limit_experiment(LOC, 9.0, CFG, 50, 1, 0)


def test_dimension_mismatch():
    with pytest.raises(ConfigurationError):
        fit_mde(sample(ParametricFamily("gaussian_location", (0, 0), (1, 1), dim=2).spec([0, 0]),
                       10, 0), LOC, CFG)
