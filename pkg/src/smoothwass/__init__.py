"""Smooth Wasserstein distances: estimation, limit laws, bootstrap inference and MDE."""
__version__ = "0.1.0"

from .errors import ConfigurationError, DegenerateNullError, GridTooSmallError, SolverError
from .seeding import SeedPath, derive_seed
from .measures import (DiscreteMeasure, DistributionSpec, Sample, SmoothingConfig,
                       check_moment_condition, empirical, gaussian, point_mass, pool, sample,
                       smooth_augment, uniform_box)
from .ot import (DualPotentials, TransportPlan, c_transform, duality_gap, solve_exact,
                 wasserstein_1d)
from .estimator import (SmoothDistanceEstimate, VarianceEstimate, barycentric_potential,
                        dense_reference, estimate_swd, plugin_variance, swd)
from .sobolev import (Grid, GridMeasure, GridSigned, GradientField, dual_norm_general_p,
                      dual_norm_p2, project_to_grid, simulate_null_limit, verify_comparison)
from .inference import (BootstrapDistribution, TestResult, bootstrap_naive_null,
                        bootstrap_one_sample_alt, bootstrap_one_sample_null,
                        bootstrap_pooled_null, bootstrap_two_sample_alt, confidence_interval,
                        equality_test, quantile)
from .mde import MdeOptions, MdeResult, ParametricFamily, fit_mde, mde_limit_experiment, mde_value_experiment
from .reports import ReplicationReport, ks_two_sample, run_replicates
