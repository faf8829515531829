"""Precision-based stopping rules for sequential randomized experiments.

Fixed-width confidence-interval and fixed-power designs (naive, conservative,
and anytime-valid variants), group-sequential and anytime-valid test
comparators, the eight benchmark data-generating processes, and a
deterministic Monte Carlo harness.
"""

__version__ = "0.1.0"

from .confseq import (CsConfig, halfwidth_scale, pooled_variance_upper,
                      radius_one_sided, radius_two_sided, tune_rho)
from .dgp import DgpSpec, DgpStream, DistSpec, analytic_moments, custom_dgp, \
    sample_unit, solve_effect_constant, solve_normalization, standard_dgp
from .errors import (BracketError, ConfigError, ConvergenceError,
                     DataValidationError, UndefinedEstimateError)
from .gst import GstPlan, boundary_at, compute_boundaries, default_looks, \
    every_n_looks, spend
from .harness import (MetricsRow, ReplicationResult, SimulationConfig,
                      derive_seed, metrics_csv, run_cell, run_grid,
                      run_replication)
from .numerics import ToleranceSpec, find_root, minimize_1d, norm_cdf, \
    norm_quantile
from .rules import (StoppingRuleSpec, StopReport, evaluate, final_report,
                    forecast_n, reference_sample_size, threshold,
                    two_sided_beta_correction)
from .streaming import ArmAccumulator, ExperimentState

__all__ = [
    "__version__",
    "ArmAccumulator", "ExperimentState",
    "ToleranceSpec", "norm_cdf", "norm_quantile", "find_root", "minimize_1d",
    "CsConfig", "radius_one_sided", "radius_two_sided", "tune_rho",
    "pooled_variance_upper", "halfwidth_scale",
    "StoppingRuleSpec", "StopReport", "threshold", "evaluate", "forecast_n",
    "final_report", "two_sided_beta_correction", "reference_sample_size",
    "GstPlan", "spend", "compute_boundaries", "boundary_at", "default_looks",
    "every_n_looks",
    "DistSpec", "DgpSpec", "DgpStream", "analytic_moments", "custom_dgp",
    "sample_unit", "solve_effect_constant", "solve_normalization", "standard_dgp",
    "SimulationConfig", "MetricsRow", "ReplicationResult", "derive_seed",
    "run_replication", "run_cell", "run_grid", "metrics_csv",
    "BracketError", "ConfigError", "ConvergenceError", "DataValidationError",
    "UndefinedEstimateError",
]
