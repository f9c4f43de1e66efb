"""Deterministic regression imputation with one independent model per target.

Each target is regressed on the always-complete covariates only (never on
other targets, never on the outcome). Binary targets use a logistic model and
are imputed as 1 when the predicted probability exceeds 0.5.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .datagen import SurvivalDataset
from .errors import DimensionMismatch, EmptyTrainingSet, RankDeficient
from .glm import GlmFit, fit_linear, fit_logistic, predict_response, with_intercept


@dataclass(frozen=True)
class ImputationStrategy:
    """``all`` | ``high`` (targets missing in more than ``threshold``) | ``few``
    (subjects missing at most ``max_missing`` covariates)."""

    variant: str = "all"
    threshold: float = 0.10
    max_missing: int = 2

    def __post_init__(self):
        if self.variant not in ("all", "high", "few"):
            raise ValueError(f"unknown imputation strategy {self.variant!r}")
        if not 0 < self.threshold < 1:
            raise ValueError("threshold must lie in (0, 1)")
        if self.max_missing < 0:
            raise ValueError("max_missing must be non-negative")

    @classmethod
    def parse(cls, text: str) -> "ImputationStrategy":
        key = text.strip().lower().replace("-", "_")
        aliases = {
            "all": "all",
            "high": "high", "only_high_missing": "high", "onlyhighmissing": "high",
            "few": "few", "only_few_missing": "few", "onlyfewmissing": "few",
        }
        if key not in aliases:
            raise ValueError(f"unknown imputation strategy {text!r}")
        return cls(aliases[key])

    @property
    def label(self) -> str:
        return self.variant


ALL = ImputationStrategy("all")
ONLY_HIGH_MISSING = ImputationStrategy("high")
ONLY_FEW_MISSING = ImputationStrategy("few")


@dataclass(frozen=True)
class TargetModel:
    target: int  # 0-based column
    binary: bool
    fit: GlmFit | None
    fallback: float
    used_fallback: bool


@dataclass(frozen=True)
class ImputationModelSet:
    predictors: tuple  # 0-based always-complete columns
    models: tuple

    @property
    def targets(self) -> tuple:
        return tuple(m.target for m in self.models)

    @property
    def fallbacks(self) -> tuple:
        """Targets whose GLM failed and are imputed by mean/mode instead."""
        return tuple(m.target for m in self.models if m.used_fallback)


@dataclass(frozen=True)
class ResidualMissingReport:
    ids: np.ndarray = field(default_factory=lambda: np.empty(0, dtype=np.int64))

    def __len__(self) -> int:
        return len(self.ids)


def is_binary_column(values) -> bool:
    v = np.asarray(values, dtype=float)
    v = v[~np.isnan(v)]
    return v.size > 0 and bool(np.all((v == 0) | (v == 1)))


def fit_imputation_models(data: SurvivalDataset, targets, complete_covs, binary=None) -> ImputationModelSet:
    """One GLM per target, fit on the rows where that target is observed.

    ``targets`` and ``complete_covs`` are 0-based column indices. ``binary``
    maps target -> bool; when omitted it is inferred from the observed values.
    """
    targets = tuple(int(t) for t in targets)
    predictors = tuple(int(c) for c in complete_covs)
    if set(targets) & set(predictors):
        raise ValueError("targets and predictors must be disjoint")
    xp = data.x[:, list(predictors)] if predictors else np.empty((len(data), 0))
    if np.isnan(xp).any():
        raise ValueError("predictor columns must be fully observed")
    design = with_intercept(xp)
    models = []
    for t in targets:
        col = data.x[:, t]
        seen = ~np.isnan(col)
        if not seen.any():
            raise EmptyTrainingSet(f"x{t + 1} is missing for every row")
        is_bin = binary[t] if binary is not None else is_binary_column(col)
        y = col[seen]
        if is_bin:
            fallback = float(np.mean(y) > 0.5)
        else:
            fallback = float(np.mean(y))
        fit = None
        try:
            fit = fit_logistic(design[seen], y) if is_bin else fit_linear(design[seen], y)
        except RankDeficient:
            pass
        ok = fit is not None and fit.converged
        models.append(TargetModel(t, bool(is_bin), fit if ok else None, fallback, not ok))
    return ImputationModelSet(predictors, tuple(models))


def predict_target(model: TargetModel, design: np.ndarray) -> np.ndarray:
    if model.fit is None:
        return np.full(design.shape[0], model.fallback)
    pred = predict_response(model.fit, design)
    if model.binary:
        return (pred > 0.5).astype(float)
    return pred


def impute(data: SurvivalDataset, models: ImputationModelSet, strategy: ImputationStrategy = ALL):
    """Fill missing target cells per ``strategy``; returns ``(dataset, report)``.

    Observed cells are never changed. Rows still holding a missing value are
    listed in the report; callers drop them before fitting the analysis model.
    """
    x = data.x.copy()
    miss = np.isnan(data.x)
    if not miss.any():
        return data.with_x(x), ResidualMissingReport()
    pred_cols = list(models.predictors)
    if pred_cols and np.isnan(data.x[:, pred_cols]).any():
        raise ValueError("imputation predictors must be fully observed")
    for m in models.models:
        if m.fit is not None and m.fit.coefficients.shape[0] != len(pred_cols) + 1:
            raise DimensionMismatch("model does not match the predictor set")
    design = with_intercept(data.x[:, pred_cols] if pred_cols else np.empty((len(data), 0)))

    n = len(data)
    eligible_rows = np.ones(n, dtype=bool)
    if strategy.variant == "few":
        eligible_rows = miss.sum(axis=1) <= strategy.max_missing
    for m in models.models:
        rows = miss[:, m.target] & eligible_rows
        if strategy.variant == "high" and not miss[:, m.target].mean() > strategy.threshold:
            continue
        if rows.any():
            x[rows, m.target] = predict_target(m, design[rows])
    out = data.with_x(x)
    residual = data.id[np.isnan(x).any(axis=1)]
    return out, ResidualMissingReport(residual)
