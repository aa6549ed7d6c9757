"""Synthetic-control weights for many treated units at once.

The package fits all treated units' donor weights in a single multivariate
square-root lasso program, predicts untreated counterfactuals, estimates
the average treatment effect on the treated, and ships the per-unit
baselines plus the simulation harness used to benchmark them.
"""

from .baselines import BaselineConfig, fit_baseline, fit_psc, fit_rols, fit_scul
from .effects import EffectReport, att, predict_counterfactual, rmse
from .exceptions import MultiscError, NumericError, PanelFormatError, RankDeficiencyError
from .matops import (
    SvdFactors,
    nuclear_norm,
    ols_multi,
    project_simplex,
    soft_threshold,
    svd,
)
from .panel import DesignSplit, PanelData, ingest_csv, split
from .simlab import SimConfig, SimResult, bench_timing, gen_ar1_panel, gen_setting, run_experiment
from .solver import (
    FitReport,
    MscConfig,
    cross_validate,
    default_lambda,
    fit,
    objective,
    subgradient_step_direction,
)

__version__ = "0.1.0"

__all__ = [
    "BaselineConfig",
    "DesignSplit",
    "EffectReport",
    "FitReport",
    "MscConfig",
    "MultiscError",
    "NumericError",
    "PanelData",
    "PanelFormatError",
    "RankDeficiencyError",
    "SimConfig",
    "SimResult",
    "SvdFactors",
    "att",
    "bench_timing",
    "cross_validate",
    "default_lambda",
    "fit",
    "fit_baseline",
    "fit_psc",
    "fit_rols",
    "fit_scul",
    "gen_ar1_panel",
    "gen_setting",
    "ingest_csv",
    "nuclear_norm",
    "objective",
    "ols_multi",
    "predict_counterfactual",
    "project_simplex",
    "rmse",
    "run_experiment",
    "soft_threshold",
    "split",
    "subgradient_step_direction",
    "svd",
    "__version__",
]
