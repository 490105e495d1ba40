"""Monotone probability-of-default calibration from cohort count data.

The pipeline: ingest per-period cohort counts (`cohorts`), form per-grade
beta posteriors (`posterior`), restore the grade ordering with the
simulate-filter-refit sweep and build sampling distributions
(`calibrator`), benchmark against most-prudent estimates and scale
everything to the portfolio central tendency (`benchmarks`), and project
calibrated means onto exogenous variables (`betareg`).  `cli` wires the
pieces into the `pdcalib` command.
"""

__version__ = "0.1.0"

from .calibrator import (CalibrationConfig, CalibrationResult, SweepResult, calibrate,
                         export_histograms, fit_beta_moments, run_sweep)
from .cohorts import (BinningMap, CohortSnapshot, GradeCount, RatingScale, apply_binning,
                      observed_default_rates, parse_cohort_csv, write_cohort_csv)
from .benchmarks import (PTConfig, ScaledComparison, build_comparison, central_tendency,
                         pluto_tasche, scale_to_ct)
from .betareg import RegressionModel, fit, predict_mean
from .posterior import GradePosterior, PortfolioPosterior, compute_posterior
from .statdist import (BetaParams, RngStream, beta_cdf, beta_mean_var, binomial_tail_le,
                       log_gamma, sample_beta, solve_monotone)

__all__ = [
    "__version__",
    "BetaParams", "RngStream", "log_gamma", "beta_mean_var", "sample_beta",
    "beta_cdf", "binomial_tail_le", "solve_monotone",
    "RatingScale", "GradeCount", "CohortSnapshot", "BinningMap",
    "parse_cohort_csv", "write_cohort_csv", "apply_binning", "observed_default_rates",
    "GradePosterior", "PortfolioPosterior", "compute_posterior",
    "CalibrationConfig", "SweepResult", "CalibrationResult",
    "fit_beta_moments", "run_sweep", "calibrate", "export_histograms",
    "PTConfig", "ScaledComparison", "central_tendency", "pluto_tasche",
    "scale_to_ct", "build_comparison",
    "RegressionModel", "fit", "predict_mean",
]
