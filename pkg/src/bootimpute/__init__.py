"""Bootstrap-then-impute internal validation of Cox risk models with missing covariates."""

from .datagen import (
    DgpConfig,
    MissingPattern,
    SurvivalDataset,
    generate_dataset,
    get_pattern,
    guided_pattern,
    impose_missingness,
    pattern_catalog,
)
from .imputation import ImputationStrategy
from .numerics import RngStream
from .survival import CoxFit, fit_cox, km_censoring, predict_risk
from .metrics import auc_td, brier_score
from .validation import ValidationConfig, ValidationReport, validate
from .simstudy import ScenarioSpec, build_grid, run_grid, run_replicate, summarize

__all__ = [
    "CoxFit", "DgpConfig", "ImputationStrategy", "MissingPattern", "RngStream",
    "ScenarioSpec", "SurvivalDataset", "ValidationConfig", "ValidationReport",
    "auc_td", "brier_score", "build_grid", "fit_cox", "generate_dataset",
    "get_pattern", "guided_pattern", "impose_missingness", "km_censoring", "pattern_catalog",
    "predict_risk", "run_grid", "run_replicate", "summarize", "validate",
]

__version__ = "0.1.0"
