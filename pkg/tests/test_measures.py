import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from smoothwass import (ConfigurationError, DiscreteMeasure, DistributionSpec, Sample,
                        SmoothingConfig, check_moment_condition, empirical, gaussian,
                        point_mass, pool, sample, smooth_augment, uniform_box)
from smoothwass.measures import draw_noise


def test_point_mass_sample():
    s = sample(point_mass(3.5), 4, 0)
    assert s.points.shape == (4, 1)
    assert np.all(s.points == 3.5)


def test_uniform_mean():
    s = sample(uniform_box([0], [1]), 100_000, 1)
    assert abs(s.points.mean() - 0.5) < 0.01


def test_sample_deterministic():
    a = sample(gaussian([0, 1], [1, 2]), 50, (2, "x"))
    b = sample(gaussian([0, 1], [1, 2]), 50, (2, "x"))
    assert np.array_equal(a.points, b.points)


def test_truncated_gaussian_respects_bounds():
    s = sample(gaussian([0], 1.0, lower=[-1], upper=[0.5]), 5000, 3)
    assert s.points.min() >= -1 and s.points.max() <= 0.5


def test_mixture_sample_weights():
    spec = DistributionSpec("gaussian_mixture",
                            {"weights": [0.25, 0.75], "means": [[-10], [10]], "scales": [1, 1]})
    s = sample(spec, 20_000, 4)
    assert abs(np.mean(s.points[:, 0] > 0) - 0.75) < 0.02


@pytest.mark.parametrize("bad", [
    dict(family="cauchy", params={}),
    dict(family="uniform_box", params={"low": [1], "high": [0]}),
    dict(family="gaussian", params={"mean": [0], "scale": [-1]}),
])
def test_invalid_spec(bad):
    with pytest.raises(ConfigurationError):
        DistributionSpec(bad["family"], bad["params"])


def test_sample_size_must_be_positive():
    with pytest.raises(ConfigurationError):
        sample(point_mass(0), 0, 0)


def test_spec_json_roundtrip():
    spec = gaussian([0, 1], [1, 2], psi2=0.3)
    again = DistributionSpec.from_json(spec.to_json())
    assert again.to_json_dict() == spec.to_json_dict()


def test_empirical_weights():
    mu = empirical(Sample(np.array([[0.0], [1.0]])))
    assert np.allclose(mu.weights, [0.5, 0.5])
    assert empirical(Sample(np.array([[2.0]]))).weights.tolist() == [1.0]


def test_duplicates_not_merged():
    mu = empirical(Sample(np.zeros((3, 1))))
    assert mu.size == 3
    assert mu.origin_index.tolist() == [0, 1, 2]


def test_measure_validation():
    with pytest.raises(ConfigurationError):
        DiscreteMeasure(np.zeros((2, 1)), [0.5, 0.6])
    with pytest.raises(ConfigurationError):
        DiscreteMeasure(np.array([[np.nan]]), [1.0])


def test_config_conjugate():
    cfg = SmoothingConfig(3.0, 0.5)
    assert abs(1 / cfg.p + 1 / cfg.q - 1) < 1e-12
    for p, s, m in [(1.0, 1, 1), (2, 0, 1), (2, 1, 0)]:
        with pytest.raises(ConfigurationError):
            SmoothingConfig(p, s, m)


def test_augment_m1_keeps_cardinality():
    mu = empirical(sample(uniform_box([0], [1]), 7, 0))
    out = smooth_augment(mu, SmoothingConfig(2, 0.3, 1), 1)
    assert out.size == 7
    assert np.allclose(out.weights, mu.weights)


def test_augment_point_mass_variance():
    mu = DiscreteMeasure(np.zeros((1, 1)), [1.0])
    out = smooth_augment(mu, SmoothingConfig(2, 1.0, 100_000), 2)
    assert abs(out.points.var() - 1.0) < 0.02


@settings(max_examples=30, deadline=None)
@given(st.integers(1, 6), st.integers(1, 20), st.integers(1, 3), st.integers(0, 1000))
def test_augment_mass_per_origin(k, m, d, seed):
    rng = np.random.default_rng(seed)
    w = rng.random(k) + 0.1
    w /= w.sum()
    mu = DiscreteMeasure(rng.normal(size=(k, d)), w)
    out = smooth_augment(mu, SmoothingConfig(2, 0.7, m), seed)
    assert abs(out.weights.sum() - 1) < 1e-12
    per = np.bincount(out.origin_index, weights=out.weights, minlength=k)
    assert np.allclose(per, w, atol=1e-15)
    # child means stay within 4 sigma / sqrt(m) of the parent
    means = np.stack([out.points[out.origin_index == i].mean(0) for i in range(k)])
    assert np.all(np.abs(means - mu.points) <= 4 * 0.7 / math.sqrt(m) + 1e-12)


def test_augment_frozen_noise():
    mu = empirical(sample(uniform_box([0], [1]), 5, 0))
    cfg = SmoothingConfig(2, 0.5, 3)
    z = draw_noise(5, 3, 1, 9)
    a = smooth_augment(mu, cfg, None, noise=z)
    b = smooth_augment(mu, cfg, 9)
    assert np.array_equal(a.points, b.points)
    with pytest.raises(ConfigurationError):
        smooth_augment(mu, cfg, None, noise=z[:, :2])


def test_pool():
    x, y = Sample(np.array([[0.0]])), Sample(np.array([[1.0]]))
    p = pool(x, y)
    assert p.points[:, 0].tolist() == [0.0, 1.0]
    assert np.allclose(empirical(pool(x, y)).weights, 0.5)
    with pytest.raises(ConfigurationError):
        pool(x, Sample(np.zeros((2, 1))))


def test_pool_identical_doubles_atoms():
    x = sample(uniform_box([0], [1]), 4, 0)
    p = empirical(pool(x, x))
    assert p.size == 8
    assert np.array_equal(np.sort(p.points[:, 0]), np.sort(np.repeat(x.points[:, 0], 2)))


def test_moment_condition():
    cfg = SmoothingConfig(2, 0.5)
    assert check_moment_condition(uniform_box([0], [1]), cfg).satisfied is True
    assert check_moment_condition(gaussian([0], 1.0), cfg).satisfied is None
    assert check_moment_condition(gaussian([0], 1.0, psi2=0.1), cfg).satisfied is True
    with warnings.catch_warnings(record=True) as w:
        warnings.simplefilter("always")
        assert check_moment_condition(gaussian([0], 1.0, psi2=1.0), cfg).satisfied is False
    assert w


def test_sample_csv_roundtrip():
    s = sample(gaussian([0, 0], 1.0), 5, 1)
    again = Sample.from_csv(s.to_csv())
    assert np.array_equal(again.points, s.points)
