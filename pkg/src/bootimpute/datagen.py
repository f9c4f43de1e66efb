"""Synthetic survival data with MAR covariate missingness.

Covariates are thresholded multivariate normal draws; event times come from
a Weibull proportional-hazards model via the inverse transform, censoring
times from an independent Weibull. Missingness is imposed one target at a
time with a logistic model on a partner's missingness indicator and one
always-observed covariate.

Covariates are addressed 1-based (``x1`` .. ``x11``) in patterns and
configs, matching the CSV column names; arrays are 0-based internally.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from typing import Iterable, TextIO

import numpy as np

from .errors import DegenerateCell, DimensionMismatch
from .numerics import (
    RngStream,
    cholesky,
    sample_bernoulli,
    sample_mvn,
    sample_uniform,
    sample_weibull,
)

N_COVARIATES = 11

MEAN = (0.6145, 57.6495, 2.3665, 0.4225, 0.1538, 0.2421,
        0.4142, 0.8680, 0.1695, 0.1636, 0.8891)

_LOWER = (
    (0.2370,),
    (-1.3349, 196.2990),
    (0.0812, 0.6471, 1.0967),
    (0.0247, -0.6314, 0.0680, 0.2441),
    (0.0298, -0.0759, 0.0452, 0.0063, 0.1302),
    (0.0134, 0.3167, 0.0063, -0.0089, 0.0070, 0.0558),
    (0.0280, -0.7944, 0.0740, 0.0468, 0.0214, -0.0015, 0.2427),
    (-0.0069, 0.0156, -0.0190, -0.0581, -0.0026, 0.0050, -0.0119, 0.1146),
    (0.0039, -0.1261, -0.0080, 0.0484, 0.0016, -0.0026, 0.0131, -0.0318, 0.1408),
    (0.0002, 0.0294, -0.0147, 0.0003, -0.0001, 0.0003, 0.0017, 0.0001, 0.0050, 0.1369),
    (0.0223, -0.8057, -0.0075, -0.0139, 0.0043, 0.0000, 0.0012, 0.0086, -0.0267, 0.0014, 0.0986),
)


def _table_covariance() -> np.ndarray:
    cov = np.zeros((N_COVARIATES, N_COVARIATES))
    for i, row in enumerate(_LOWER):
        cov[i, :len(row)] = row
    return np.tril(cov) + np.tril(cov, -1).T


HAZARD_RATIOS = (0.80, 1.05, 1.25, 1.54, 1.18, 1.45, 1.10, 0.76, 0.64, 1.25, 0.48)
BINARY = (1, 4, 5, 7, 8, 9, 10, 11)
COLUMNS = tuple(f"x{j}" for j in range(1, N_COVARIATES + 1))


@dataclass(frozen=True)
class DgpConfig:
    n: int = 3500
    mu: tuple = MEAN
    sigma: np.ndarray = field(default_factory=_table_covariance)
    binary_indices: tuple = BINARY
    log_hr: tuple = tuple(math.log(h) for h in HAZARD_RATIOS)
    event_shape: float = 1.6
    event_scale: float = 122.0
    cens_shape: float = 2.6
    cens_scale: float = 8.2
    horizon: float = 5.0

    def __post_init__(self):
        if self.n < 0:
            raise ValueError("n must be non-negative")
        p = len(self.mu)
        if len(self.log_hr) != p or np.shape(self.sigma) != (p, p):
            raise DimensionMismatch("mu, log_hr and sigma must agree in dimension")
        if not all(1 <= j <= p for j in self.binary_indices):
            raise ValueError("binary_indices are 1-based covariate numbers")
        cholesky(self.sigma)  # raises NotPositiveDefinite

    @property
    def p(self) -> int:
        return len(self.mu)

    def replace(self, **changes) -> "DgpConfig":
        from dataclasses import replace
        return replace(self, **changes)


@dataclass(frozen=True)
class SurvivalDataset:
    """Per-subject ids, observed times, event flags and covariates.

    ``x`` holds NaN for a missing covariate value.
    """

    id: np.ndarray
    s: np.ndarray
    delta: np.ndarray
    x: np.ndarray

    def __post_init__(self):
        n = len(self.id)
        if self.s.shape != (n,) or self.delta.shape != (n,) or self.x.shape[0] != n:
            raise DimensionMismatch("id, s, delta and x must share the row count")

    @classmethod
    def build(cls, s, delta, x, id=None) -> "SurvivalDataset":
        s = np.asarray(s, dtype=float)
        delta = np.asarray(delta, dtype=np.int8)
        x = np.asarray(x, dtype=float)
        if x.ndim == 1 and x.size == 0:
            x = x.reshape(0, N_COVARIATES)
        if id is None:
            id = np.arange(1, s.shape[0] + 1, dtype=np.int64)
        if len(np.unique(id)) != len(id):
            raise ValueError("subject ids must be unique")
        if np.any(s <= 0):
            raise ValueError("observed times must be positive")
        if np.any((delta != 0) & (delta != 1)):
            raise ValueError("event indicator must be 0 or 1")
        return cls(np.asarray(id, dtype=np.int64), s, delta, x)

    def __len__(self) -> int:
        return len(self.id)

    @property
    def p(self) -> int:
        return self.x.shape[1]

    def missing_mask(self) -> np.ndarray:
        return np.isnan(self.x)

    def take(self, rows) -> "SurvivalDataset":
        rows = np.asarray(rows)
        return SurvivalDataset(self.id[rows], self.s[rows], self.delta[rows], self.x[rows])

    def complete_rows(self) -> np.ndarray:
        return ~np.any(np.isnan(self.x), axis=1)

    def complete_cases(self) -> "SurvivalDataset":
        return self.take(np.flatnonzero(self.complete_rows()))

    def with_x(self, x: np.ndarray) -> "SurvivalDataset":
        return SurvivalDataset(self.id, self.s, self.delta, x)


# -- generation ---------------------------------------------------------------

def generate_covariates(config: DgpConfig, rng: RngStream) -> np.ndarray:
    x = sample_mvn(config.mu, config.sigma, config.n, rng)
    for j in config.binary_indices:
        x[:, j - 1] = (x[:, j - 1] > 0.5).astype(float)
    return x


def event_times(u, linear_predictor, shape: float, scale: float) -> np.ndarray:
    """Inverse-transform Weibull PH event times for uniform draws ``u``."""
    u = np.asarray(u, dtype=float)
    return scale * (-np.log(u) / np.exp(linear_predictor)) ** (1.0 / shape)


def generate_survival(covs, config: DgpConfig, rng: RngStream, debug: bool = False):
    """Observed times and event flags; with ``debug`` also the latent t and c."""
    covs = np.asarray(covs, dtype=float)
    if covs.ndim != 2 or covs.shape[1] != config.p:
        raise DimensionMismatch(f"expected {config.p} covariate columns")
    n = covs.shape[0]
    u = sample_uniform(n, rng)
    t = event_times(u, covs @ np.asarray(config.log_hr), config.event_shape, config.event_scale)
    c = sample_weibull(config.cens_shape, config.cens_scale, n, rng)
    s = np.minimum(t, c)
    delta = (t <= c).astype(np.int8)
    if debug:
        return s, delta, t, c
    return s, delta


def generate_dataset(config: DgpConfig, rng: RngStream) -> SurvivalDataset:
    x = generate_covariates(config, rng)
    s, delta = generate_survival(x, config, rng)
    return SurvivalDataset.build(s, delta, x)


# -- missingness ---------------------------------------------------------------

def compute_gamma1(p_j: float, p_k: float, p_joint: float) -> float:
    """Log odds ratio of the 2x2 missingness table implied by the marginals and joint."""
    p11 = p_joint
    p10 = p_j - p_joint
    p01 = p_k - p_joint
    p00 = 1.0 - p10 - p01 - p11
    cells = (p00, p01, p10, p11)
    if min(cells) <= 0:
        raise DegenerateCell(f"cell proportions {cells} must all be positive")
    return math.log((p00 * p11) / (p10 * p01))


def compute_gamma0(p_j: float, gamma1: float, p_k: float, gamma2: float, xbar_l: float) -> float:
    if not 0 < p_j < 1:
        raise ValueError("target marginal must lie in (0, 1)")
    return math.log(p_j / (1.0 - p_j)) - gamma1 * p_k - gamma2 * xbar_l


@dataclass(frozen=True)
class MissingEntry:
    target: int
    p: float
    partner: int | None
    value_covariate: int
    gamma2: float
    joint: float | None = None


@dataclass(frozen=True)
class MissingPattern:
    label: str
    entries: tuple

    def __post_init__(self):
        seen = set()
        for e in self.entries:
            if not 0 < e.p < 1:
                raise ValueError(f"x{e.target}: marginal must lie in (0, 1)")
            ids = {e.target, e.value_covariate} | ({e.partner} if e.partner else set())
            if len(ids) != (3 if e.partner else 2):
                raise ValueError(f"x{e.target}: target, partner and value covariate must differ")
            if e.partner is not None and e.partner not in seen:
                raise ValueError(f"x{e.target}: partner x{e.partner} must be an earlier target")
            seen.add(e.target)

    @property
    def targets(self) -> tuple:
        return tuple(e.target for e in self.entries)

    @property
    def marginals(self) -> tuple:
        return tuple(e.p for e in self.entries)

    def joint_pairs(self) -> list[tuple[int, int, float]]:
        return [(e.partner, e.target, e.joint) for e in self.entries if e.partner is not None]


@dataclass(frozen=True)
class MissingnessCoefficients:
    target: int
    gamma0: float
    gamma1: float
    gamma2: float


# Table of (partner k_j, value covariate l_j, gamma2_j) per potentially missing covariate
MECHANISM = {
    1: (None, 2, math.log(1.05)),
    3: (1, 5, math.log(0.80)),
    4: (3, 6, math.log(0.70)),
    7: (4, 8, math.log(0.90)),
    10: (5, 9, math.log(0.60)),
    11: (10, 2, math.log(1.05)),
}

# unordered pair of marginals -> joint missing proportion
JOINT = {
    (0.05, 0.05): 0.01,
    (0.05, 0.15): 0.02,
    (0.15, 0.15): 0.05,
    (0.15, 0.30): 0.07,
    (0.30, 0.30): 0.10,
    (0.30, 0.60): 0.20,
    (0.60, 0.60): 0.40,
}


def joint_proportion(p_a: float, p_b: float) -> float:
    key = tuple(sorted((round(p_a, 6), round(p_b, 6))))
    try:
        return JOINT[key]
    except KeyError:
        raise KeyError(f"no joint missingness proportion for marginals {key}") from None


def make_pattern(label: str, marginals: dict, joints: dict | None = None) -> MissingPattern:
    """Pattern over ``marginals`` (covariate -> proportion) using the standard mechanisms.

    A partner that is not itself a target is never missing, so its term drops
    out and the entry is treated as having no partner. ``joints`` may override
    the looked-up joint proportion keyed by ``(partner, target)``.
    """
    joints = joints or {}
    entries = []
    for target in sorted(marginals, key=lambda j: list(MECHANISM).index(j)):
        partner, value_cov, gamma2 = MECHANISM[target]
        p = marginals[target]
        if partner not in marginals:
            partner = None
        joint = None
        if partner is not None:
            joint = joints.get((partner, target), joint_proportion(p, marginals[partner]))
        entries.append(MissingEntry(target, p, partner, value_cov, gamma2, joint))
    return MissingPattern(label, tuple(entries))


_SIX = (1, 3, 4, 7, 10, 11)

_CATALOG_SPEC = {
    "A": {1: 0.05},
    "B": {1: 0.15},
    "C": {1: 0.60},
    "D": dict(zip((1, 3, 4), (0.05, 0.05, 0.05))),
    "E": dict(zip((1, 3, 4), (0.05, 0.15, 0.30))),
    "F": dict(zip((1, 3, 4), (0.15, 0.30, 0.60))),
    "G": dict(zip(_SIX, (0.05,) * 6)),
    "H": dict(zip(_SIX, (0.05, 0.05, 0.15, 0.15, 0.30, 0.30))),
    "I": dict(zip(_SIX, (0.15, 0.15, 0.30, 0.30, 0.60, 0.60))),
}


def pattern_catalog() -> dict[str, MissingPattern]:
    """The nine simulation-study patterns A-I."""
    return {label: make_pattern(label, spec) for label, spec in _CATALOG_SPEC.items()}


def guided_pattern() -> MissingPattern:
    """Pattern E with an x3/x4 joint of 0.075 instead of 0.07."""
    return make_pattern("guided", _CATALOG_SPEC["E"], joints={(3, 4): 0.075})


def no_missing_pattern() -> MissingPattern:
    return MissingPattern("none", ())


def get_pattern(label: str) -> MissingPattern:
    key = label.strip()
    if key.lower() == "none":
        return no_missing_pattern()
    if key.lower() == "guided":
        return guided_pattern()
    catalog = pattern_catalog()
    if key.upper() not in catalog:
        raise KeyError(f"unknown missing pattern {label!r}")
    return catalog[key.upper()]


def missingness_coefficients(pattern: MissingPattern, x: np.ndarray) -> list[MissingnessCoefficients]:
    """Intercepts from target marginals and the empirical mean of each value covariate."""
    marg = {e.target: e.p for e in pattern.entries}
    out = []
    for e in pattern.entries:
        if e.partner is None:
            g1, p_k = 0.0, 0.0
        else:
            p_k = marg[e.partner]
            g1 = compute_gamma1(e.p, p_k, e.joint)
        xbar = float(np.mean(x[:, e.value_covariate - 1]))
        out.append(MissingnessCoefficients(e.target, compute_gamma0(e.p, g1, p_k, e.gamma2, xbar), g1, e.gamma2))
    return out


def _logistic(z):
    return 1.0 / (1.0 + np.exp(-z))


def _calibrated_intercept(target_p: float, offset: np.ndarray) -> float:
    """Intercept whose mean fitted probability over ``offset`` equals ``target_p``."""
    lo, hi = -50.0, 50.0
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if np.mean(_logistic(mid + offset)) < target_p:
            lo = mid
        else:
            hi = mid
        if hi - lo < 1e-12:
            break
    return 0.5 * (lo + hi)


def impose_missingness(data: SurvivalDataset, pattern: MissingPattern, rng: RngStream,
                       calibrate: bool = False) -> SurvivalDataset:
    """Blank pattern targets sequentially; ``s``, ``delta`` and other columns are untouched.

    By default the intercepts come from the closed-form marginal equation,
    which lets the realised marginal drift when the value covariate has a
    skewed effect on the logit scale (x1 at 5% lands near 6%). With
    ``calibrate=True`` each intercept is instead solved numerically so the
    expected marginal, given the realised partner indicators, hits the target.
    """
    x = data.x.copy()
    if not pattern.entries:
        return data.with_x(x)
    targets = pattern.targets
    if np.any(np.isnan(data.x[:, [t - 1 for t in targets]])):
        raise ValueError("pattern targets must be fully observed before missingness is imposed")
    indicators: dict[int, np.ndarray] = {}
    for e, coef in zip(pattern.entries, missingness_coefficients(pattern, data.x)):
        m_partner = indicators[e.partner] if e.partner is not None else 0.0
        offset = coef.gamma1 * m_partner + coef.gamma2 * data.x[:, e.value_covariate - 1]
        gamma0 = _calibrated_intercept(e.p, offset) if calibrate else coef.gamma0
        m = sample_bernoulli(_logistic(gamma0 + offset), rng)
        indicators[e.target] = m
        x[m == 1, e.target - 1] = np.nan
    return data.with_x(x)


# -- CSV ----------------------------------------------------------------------

def _fmt(v: float) -> str:
    return "" if np.isnan(v) else f"{v:.10g}"


def write_csv(data: SurvivalDataset, fh: TextIO, header_lines: Iterable[str] = ()) -> None:
    """``id,s,delta,x1..xp``; missing as an empty field; preceding ``# `` comment lines."""
    for line in header_lines:
        fh.write(f"# {line}\n")
    cols = ["id", "s", "delta"] + [f"x{j}" for j in range(1, data.p + 1)]
    fh.write(",".join(cols) + "\n")
    for i in range(len(data)):
        row = [str(int(data.id[i])), _fmt(data.s[i]), str(int(data.delta[i]))]
        row.extend(_fmt(v) for v in data.x[i])
        fh.write(",".join(row) + "\n")


def dataset_to_csv(data: SurvivalDataset, header_lines: Iterable[str] = ()) -> str:
    buf = io.StringIO()
    write_csv(data, buf, header_lines)
    return buf.getvalue()


def read_csv(fh: TextIO) -> SurvivalDataset:
    rows = csv.reader(line for line in fh if line.strip() and not line.startswith("#"))
    try:
        header = next(rows)
    except StopIteration:
        raise ValueError("dataset file is empty") from None
    header = [h.strip() for h in header]
    if header[:3] != ["id", "s", "delta"]:
        raise ValueError("dataset header must start with id,s,delta")
    xcols = header[3:]
    if xcols != [f"x{j}" for j in range(1, len(xcols) + 1)]:
        raise ValueError("covariate columns must be x1..xp in order")
    ids, s, delta, x = [], [], [], []
    for lineno, rec in enumerate(rows, start=2):
        if len(rec) != len(header):
            raise ValueError(f"row {lineno}: expected {len(header)} fields, got {len(rec)}")
        ids.append(int(rec[0]))
        s.append(float(rec[1]))
        delta.append(int(float(rec[2])))
        x.append([float(v) if v.strip() else np.nan for v in rec[3:]])
    x_arr = np.asarray(x, dtype=float).reshape(len(ids), len(xcols))
    return SurvivalDataset.build(s, delta, x_arr, id=ids)
