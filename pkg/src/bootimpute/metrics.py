"""IPCW time-dependent AUC and Brier score at a fixed horizon.

Cases (event by ``t``) are weighted by ``1 / G(s_i-)``, controls (still event
free after ``t``) by ``1 / G(t)``, where ``G`` is the reverse Kaplan-Meier
estimate of the censoring survival on the data being scored. Subjects
censored before ``t`` get weight zero.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import kernels
from .errors import NoCases, NoControls, ZeroWeight
from .survival import CoxFit, KmCurve, km_censoring, predict_risk

CASE, CONTROL, CENSORED = 1, 0, -1


@dataclass(frozen=True)
class ScorePair:
    auc: float
    brier: float
    horizon: float
    n_cases: int
    n_controls: int


def classify_at_horizon(s, delta, t: float) -> np.ndarray:
    """Per-subject status: ``CASE`` (1), ``CONTROL`` (0) or ``CENSORED`` (-1)."""
    if not t > 0:
        raise ValueError("horizon must be positive")
    s = np.asarray(s, dtype=float)
    delta = np.asarray(delta)
    status = np.full(s.shape, CENSORED, dtype=np.int8)
    status[s > t] = CONTROL
    status[(s <= t) & (delta != 0)] = CASE
    return status


def _weights(status, s, t, g: KmCurve):
    case = status == CASE
    ctrl = status == CONTROL
    g_case = g.left(s[case])
    g_t = float(g(t))
    if np.any(g_case <= 0) or (ctrl.any() and g_t <= 0):
        raise ZeroWeight("censoring survival is zero where a weight is needed")
    w_ctrl = 1.0 / g_t if ctrl.any() else 0.0
    return case, ctrl, 1.0 / g_case, w_ctrl


def brier_score(risk, s, delta, t: float, g: KmCurve) -> float:
    risk = np.asarray(risk, dtype=float)
    s = np.asarray(s, dtype=float)
    status = classify_at_horizon(s, delta, t)
    case, ctrl, w_case, w_ctrl = _weights(status, s, t, g)
    total = np.sum((1.0 - risk[case]) ** 2 * w_case) + np.sum(risk[ctrl] ** 2) * w_ctrl
    return float(total / risk.size)


def auc_td(risk, s, delta, t: float, g: KmCurve) -> float:
    """Cumulative/dynamic AUC; risk ties between a case and a control count 1/2."""
    risk = np.asarray(risk, dtype=float)
    s = np.asarray(s, dtype=float)
    status = classify_at_horizon(s, delta, t)
    case, ctrl, w_case, _ = _weights(status, s, t, g)
    if not case.any():
        raise NoCases(f"no events by t={t}")
    if not ctrl.any():
        raise NoControls(f"nobody event-free after t={t}")
    counts = kernels.auc_counts(np.ascontiguousarray(risk[case]), np.ascontiguousarray(risk[ctrl]))
    return float(np.sum(w_case * counts) / (np.sum(w_case) * ctrl.sum()))


def score(fit: CoxFit, x, s, delta, t: float) -> ScorePair:
    """AUC and Brier of ``fit`` on one dataset, with its own censoring estimate."""
    s = np.asarray(s, dtype=float)
    risk = predict_risk(fit, x, t)
    g = km_censoring(s, delta)
    status = classify_at_horizon(s, delta, t)
    return ScorePair(
        auc=auc_td(risk, s, delta, t, g),
        brier=brier_score(risk, s, delta, t, g),
        horizon=t,
        n_cases=int(np.sum(status == CASE)),
        n_controls=int(np.sum(status == CONTROL)),
    )
