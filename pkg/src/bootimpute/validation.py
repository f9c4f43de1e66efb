"""Bootstrap internal validation with imputation redone inside every resample.

For the bootstrap-then-impute (``BI``) approach the raw data are imputed once
to give ``dat``, the analysis model fitted on ``dat`` gives the apparent
scores. Each bootstrap resamples the *raw* rows, refits the imputation
models inside the sample, imputes, refits the Cox model and scores it on the
sample, on ``dat`` and on the rows of ``dat`` that were not drawn. The
complete-case (``CC``) approach replaces imputation with row deletion.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .datagen import SurvivalDataset
from .errors import (
    AllBootstrapsFailed,
    AnalysisModelFailure,
    BivError,
    CoxFitFailure,
    DegenerateNoInformation,
    MetricUndefined,
)
from .imputation import ALL, ImputationStrategy, fit_imputation_models, impute, is_binary_column
from .metrics import ScorePair, score
from .numerics import RngStream
from .survival import CoxFit, fit_cox

log = logging.getLogger(__name__)

GAMMA_AUC = 0.5
GAMMA_BRIER = 0.25
METRICS = ("auc", "brier")
ESTIMATORS = ("apparent", "boot", "632", "632plus")

REPORT_COLUMNS = (
    "approach", "strategy", "n_boot_used", "boot_failures",
    "auc_apparent", "auc_boot", "auc_632", "auc_632plus",
    "brier_apparent", "brier_boot", "brier_632", "brier_632plus",
)


@dataclass(frozen=True)
class ValidationConfig:
    n_boot: int = 500
    horizon: float = 5.0
    strategy: ImputationStrategy = ALL
    approach: str = "BI"
    seed: int = 20240819

    def __post_init__(self):
        if self.n_boot < 1:
            raise ValueError("n_boot must be at least 1")
        if not self.horizon > 0:
            raise ValueError("horizon must be positive")
        if self.approach not in ("BI", "CC"):
            raise ValueError("approach must be 'BI' or 'CC'")


@dataclass(frozen=True)
class MetricEstimates:
    apparent: float
    boot: float
    e632: float
    e632plus: float

    def get(self, estimator: str) -> float:
        return {"apparent": self.apparent, "boot": self.boot,
                "632": self.e632, "632plus": self.e632plus}[estimator]


@dataclass(frozen=True)
class ValidationReport:
    approach: str
    strategy: str
    auc: MetricEstimates
    brier: MetricEstimates
    n_boot_used: int
    boot_failures: int
    gamma: dict = field(default_factory=lambda: {"auc": GAMMA_AUC, "brier": GAMMA_BRIER})

    def row(self) -> dict:
        out = {"approach": self.approach, "strategy": self.strategy,
               "n_boot_used": self.n_boot_used, "boot_failures": self.boot_failures}
        for m in METRICS:
            est = getattr(self, m)
            for e in ESTIMATORS:
                out[f"{m}_{e}"] = est.get(e)
        return out

    def csv_row(self) -> str:
        row = self.row()
        return ",".join(_fmt(row[c]) for c in REPORT_COLUMNS)


def _fmt(v) -> str:
    if isinstance(v, float):
        return f"{v:.10g}"
    return str(v)


# -- estimators ---------------------------------------------------------------

def boot_corrected(app: float, b_perf, o_perf) -> float:
    b_perf = np.asarray(b_perf, dtype=float)
    o_perf = np.asarray(o_perf, dtype=float)
    if b_perf.shape != o_perf.shape or b_perf.size == 0:
        raise ValueError("need equal-length, non-empty performance vectors")
    return float(app - np.mean(b_perf - o_perf))


def e632(app: float, test_perf) -> float:
    test_perf = np.asarray(test_perf, dtype=float)
    if test_perf.size == 0:
        raise ValueError("no test performances")
    return float(0.368 * app + 0.632 * np.mean(test_perf))


def e632plus(app: float, test_perf, gamma: float) -> float:
    """.632+ with relative overfitting rate R = (test - app) / (gamma - app), unclamped."""
    test_perf = np.asarray(test_perf, dtype=float)
    if test_perf.size == 0:
        raise ValueError("no test performances")
    if gamma == app:
        raise DegenerateNoInformation("apparent performance equals the no-information value")
    test = float(np.mean(test_perf))
    r = (test - app) / (gamma - app)
    w = 0.632 / (1.0 - 0.368 * r)
    return float((1.0 - w) * app + w * test)


# -- resampling ---------------------------------------------------------------

def bootstrap_indices(n: int, rng: RngStream) -> np.ndarray:
    return rng.generator.integers(0, n, size=n)


def bootstrap_sample(data: SurvivalDataset, rng: RngStream):
    """Resample rows with replacement; returns ``(sample, oob_ids)``."""
    if len(data) < 1:
        raise ValueError("cannot resample an empty dataset")
    idx = bootstrap_indices(len(data), rng)
    sample = data.take(idx)
    return sample, np.setdiff1d(data.id, sample.id)


# -- pipeline -----------------------------------------------------------------

class _Preparer:
    """Turns raw rows into analysis-ready complete rows for one approach."""

    def __init__(self, raw: SurvivalDataset, config: ValidationConfig):
        self.config = config
        miss_cols = np.isnan(raw.x).any(axis=0)
        self.targets = tuple(np.flatnonzero(miss_cols))
        self.predictors = tuple(np.flatnonzero(~miss_cols))
        self.binary = {t: is_binary_column(raw.x[:, t]) for t in self.targets}

    def __call__(self, data: SurvivalDataset) -> SurvivalDataset:
        if self.config.approach == "CC" or not self.targets:
            return data.complete_cases()
        models = fit_imputation_models(data, self.targets, self.predictors, binary=self.binary)
        imputed, residual = impute(data, models, self.config.strategy)
        if len(residual):
            return imputed.complete_cases()
        return imputed


@dataclass
class _BootTrace:
    b: list = field(default_factory=list)
    o: list = field(default_factory=list)
    test: list = field(default_factory=list)


def _fit(data: SurvivalDataset) -> CoxFit:
    return fit_cox(data.x, data.s, data.delta)


def _score(fit: CoxFit, data: SurvivalDataset, t: float) -> ScorePair:
    return score(fit, data.x, data.s, data.delta, t)


@dataclass(frozen=True)
class ValidationResult:
    report: ValidationReport
    apparent_fit: CoxFit
    dat: SurvivalDataset


def run_validation(
    raw: SurvivalDataset,
    config: ValidationConfig,
    rng: RngStream | None = None,
    resample: Callable[[int, RngStream], np.ndarray] | None = None,
) -> ValidationResult:
    """Full pipeline; also returns the apparent model and the analysed rows."""
    if len(raw) == 0:
        raise ValueError("empty dataset")
    rng = rng if rng is not None else RngStream(config.seed)
    resample = resample or bootstrap_indices
    t = config.horizon
    prepare = _Preparer(raw, config)

    try:
        dat = prepare(raw)
        app_fit = _fit(dat)
        app = _score(app_fit, dat, t)
    except (BivError, ValueError) as exc:
        raise AnalysisModelFailure(f"apparent model failed: {exc}") from exc

    trace = {m: _BootTrace() for m in METRICS}
    failures = 0
    for b in range(config.n_boot):
        idx = resample(len(raw), rng.child(b))
        sample = raw.take(idx)
        test_rows = ~np.isin(dat.id, sample.id)
        try:
            prepared = prepare(sample)
            fit_b = _fit(prepared)
            perf_b = _score(fit_b, prepared, t)
            perf_o = _score(fit_b, dat, t)
            perf_test = _score(fit_b, dat.take(np.flatnonzero(test_rows)), t)
        except (CoxFitFailure, MetricUndefined, ValueError) as exc:
            log.debug("bootstrap %d failed: %s", b, exc)
            failures += 1
            continue
        for m in METRICS:
            trace[m].b.append(getattr(perf_b, m))
            trace[m].o.append(getattr(perf_o, m))
            trace[m].test.append(getattr(perf_test, m))

    used = config.n_boot - failures
    if used == 0:
        raise AllBootstrapsFailed(f"all {config.n_boot} bootstrap fits failed")

    def estimates(metric: str, gamma: float) -> MetricEstimates:
        a = getattr(app, metric)
        tr = trace[metric]
        return MetricEstimates(
            apparent=a,
            boot=boot_corrected(a, tr.b, tr.o),
            e632=e632(a, tr.test),
            e632plus=e632plus(a, tr.test, gamma),
        )

    report = ValidationReport(
        approach=config.approach,
        strategy=config.strategy.label if config.approach == "BI" else "none",
        auc=estimates("auc", GAMMA_AUC),
        brier=estimates("brier", GAMMA_BRIER),
        n_boot_used=used,
        boot_failures=failures,
    )
    return ValidationResult(report, app_fit, dat)


def validate(raw: SurvivalDataset, config: ValidationConfig, rng: RngStream | None = None,
             resample=None) -> ValidationReport:
    return run_validation(raw, config, rng, resample).report
