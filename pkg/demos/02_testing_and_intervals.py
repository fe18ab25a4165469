"""
Equality testing and confidence intervals
=========================================

The pooled bootstrap calibrates the equality test; the basic bootstrap
gives an interval for the distance itself.
"""
import warnings

from smoothwass import (SmoothingConfig, bootstrap_naive_null, bootstrap_pooled_null,
                        confidence_interval, equality_test, gaussian, quantile, sample,
                        uniform_box)

cfg = SmoothingConfig(2.0, 0.5, 32)

# same law on both sides: the test should usually not reject
g = gaussian([0.0], 1.0, lower=[-3.0], upper=[3.0])
x, y = sample(g, 200, (2, "x")), sample(g, 200, (2, "y"))
res = equality_test(x, y, cfg, alpha=0.1, B=200, seed_path=(2, "test"))
print(f"H0 true : statistic {res.statistic:.3f}, critical {res.critical_value:.3f}, "
      f"p = {res.p_value:.3f}, reject = {res.reject}")

# well separated laws
z = sample(uniform_box([1.0], [2.0]), 200, (2, "z"))
w = sample(uniform_box([0.0], [1.0]), 200, (2, "w"))
res = equality_test(w, z, cfg, alpha=0.1, B=200, seed_path=(2, "test2"))
print(f"H0 false: statistic {res.statistic:.3f}, critical {res.critical_value:.3f}, "
      f"p = {res.p_value:.3f}, reject = {res.reject}")

# why pooling matters: resampling each sample separately inflates the null law
pooled = bootstrap_pooled_null(x, y, cfg, 200, (2, "pooled"))
with warnings.catch_warnings():
    warnings.simplefilter("ignore")
    naive = bootstrap_naive_null(x, y, cfg, 200, (2, "naive"))
print(f"90% quantile, pooled bootstrap: {quantile(pooled, 0.9):.3f}")
print(f"90% quantile, naive bootstrap : {quantile(naive, 0.9):.3f}")

ci = confidence_interval(w, sample(uniform_box([0.5], [1.5]), 200, (2, "v")), cfg,
                         alpha=0.05, B=200, seed_path=(2, "ci"))
print(f"95% interval for a shift of 0.5: [{ci.lo:.3f}, {ci.hi:.3f}]")
