"""Linear and logistic regression for the imputation models."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatch, NotPositiveDefinite, RankDeficient
from .numerics import solve_spd

SCORE_TOL = 1e-8
LOGLIK_RTOL = 1e-10
MAX_ITER = 25
MAX_HALVINGS = 10
# fitted probabilities this close to 0 or 1 mean (quasi-)separation
SEPARATION_EPS = 1e-8


@dataclass(frozen=True)
class GlmFit:
    link: str  # "identity" or "logit"
    coefficients: np.ndarray
    converged: bool
    iterations: int
    n_used: int


def _check(design, y):
    design = np.asarray(design, dtype=float)
    y = np.asarray(y, dtype=float)
    if design.ndim != 2 or y.shape != (design.shape[0],):
        raise DimensionMismatch("design rows must match the response length")
    if design.shape[0] < design.shape[1]:
        raise RankDeficient("fewer rows than columns")
    if np.isnan(design).any() or np.isnan(y).any():
        raise ValueError("missing values in regression input")
    return design, y


def _spd_solve(a, b):
    # Jacobi scaling keeps the pivot test meaningful for badly scaled columns
    d = np.sqrt(np.diag(a))
    if np.any(~(d > 0)):
        raise RankDeficient("a design column is identically zero")
    try:
        return solve_spd(a / np.outer(d, d), b / d) / d
    except NotPositiveDefinite as exc:
        raise RankDeficient(str(exc)) from exc


def fit_linear(design, y) -> GlmFit:
    """Least squares through the normal equations."""
    design, y = _check(design, y)
    coef = _spd_solve(design.T @ design, design.T @ y)
    return GlmFit("identity", coef, True, 1, design.shape[0])


def _bernoulli_loglik(eta, y):
    # log(1 + e^eta) computed stably
    return float(np.sum(y * eta - np.logaddexp(0.0, eta)))


def fit_logistic(design, y, max_iter: int = MAX_ITER) -> GlmFit:
    """IRLS (Newton) for the Bernoulli log-likelihood with step-halving.

    Separation shows up as a fit that runs out of iterations; it is returned
    with ``converged=False`` rather than raised.
    """
    design, y = _check(design, y)
    if np.any((y != 0) & (y != 1)):
        raise ValueError("logistic response must be 0/1")
    n, p = design.shape
    beta = np.zeros(p)
    eta = np.zeros(n)
    ll = _bernoulli_loglik(eta, y)
    converged = False
    it = 0
    for it in range(1, max_iter + 1):
        mu = 1.0 / (1.0 + np.exp(-eta))
        score = design.T @ (y - mu)
        if np.max(np.abs(score)) < SCORE_TOL:
            converged = True
            it -= 1
            break
        w = mu * (1.0 - mu)
        info = design.T @ (design * w[:, None])
        step = _spd_solve(info, score)
        for _ in range(MAX_HALVINGS + 1):
            new_beta = beta + step
            new_eta = design @ new_beta
            new_ll = _bernoulli_loglik(new_eta, y)
            if new_ll >= ll:
                break
            step = step / 2.0
        else:
            break
        change = abs(new_ll - ll) / (abs(ll) + LOGLIK_RTOL)
        beta, eta, ll = new_beta, new_eta, new_ll
        if change < LOGLIK_RTOL:
            mu = 1.0 / (1.0 + np.exp(-eta))
            converged = bool(np.max(np.abs(design.T @ (y - mu))) < 1e-6)
            break
    mu = 1.0 / (1.0 + np.exp(-eta))
    if converged and np.min(np.minimum(mu, 1.0 - mu)) < SEPARATION_EPS:
        converged = False
    return GlmFit("logit", beta, converged, it, n)


def predict_response(fit: GlmFit, design) -> np.ndarray:
    design = np.asarray(design, dtype=float)
    if design.ndim != 2 or design.shape[1] != fit.coefficients.shape[0]:
        raise DimensionMismatch(
            f"design has {design.shape[-1]} columns, fit has {fit.coefficients.shape[0]}")
    eta = design @ fit.coefficients
    if fit.link == "identity":
        return eta
    return 1.0 / (1.0 + np.exp(-eta))


def with_intercept(x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    return np.column_stack([np.ones(x.shape[0]), x])
