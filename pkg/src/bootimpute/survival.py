"""Cox proportional hazards, Breslow baseline, absolute risk and reverse Kaplan-Meier.

Ties in the partial likelihood use Efron's approximation; the baseline
cumulative hazard uses the Breslow increment ``d_k / sum_{risk set} exp(b'x)``.
At a time shared by events and censorings, all of them are in the risk set.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import kernels
from .errors import NonConvergence, NotPositiveDefinite, SingularInformation
from .numerics import solve_spd

LOGLIK_RTOL = 1e-9
MAX_ITER = 20
MAX_HALVINGS = 10
# a coefficient whose pending Newton step exceeds both bounds is still running
# off to infinity (monotone likelihood) even though the loglik has flattened
INF_STEP_ABS = 1e-9
INF_STEP_REL = INF_STEP_ABS ** 0.5


@dataclass(frozen=True)
class CoxFit:
    beta: np.ndarray
    loglik: float
    converged: bool
    iterations: int
    baseline_times: np.ndarray
    baseline_hazard: np.ndarray

    def cumulative_hazard(self, t) -> np.ndarray:
        """Baseline cumulative hazard at ``t`` (right-continuous step function)."""
        idx = np.searchsorted(self.baseline_times, np.asarray(t, dtype=float), side="right")
        return np.r_[0.0, self.baseline_hazard][idx]


@dataclass(frozen=True)
class KmCurve:
    times: np.ndarray
    surv: np.ndarray

    def __call__(self, t) -> np.ndarray:
        """Right-continuous value S(t)."""
        idx = np.searchsorted(self.times, np.asarray(t, dtype=float), side="right")
        return np.r_[1.0, self.surv][idx]

    def left(self, t) -> np.ndarray:
        """Left limit S(t-)."""
        idx = np.searchsorted(self.times, np.asarray(t, dtype=float), side="left")
        return np.r_[1.0, self.surv][idx]


def _sorted_inputs(x, s, delta):
    x = np.asarray(x, dtype=float)
    s = np.asarray(s, dtype=float)
    delta = np.asarray(delta, dtype=np.int8)
    order = np.argsort(s, kind="stable")
    return np.ascontiguousarray(x[order]), np.ascontiguousarray(s[order]), np.ascontiguousarray(delta[order])


def partial_loglik(x, s, delta, beta, backend=None):
    """Efron log partial likelihood, score and information at ``beta``."""
    xs, ss, ds = _sorted_inputs(x, s, delta)
    fn = backend or kernels.cox_efron
    return fn(xs, ss, ds, np.asarray(beta, dtype=float))


def _newton_step(info, grad):
    diag = np.diag(info)
    if np.any(~(diag > 0)):
        raise SingularInformation("information matrix has a zero diagonal entry")
    d = np.sqrt(diag)
    try:
        return solve_spd(info / np.outer(d, d), grad / d) / d
    except NotPositiveDefinite as exc:
        raise SingularInformation(str(exc)) from exc


def fit_cox(x, s, delta, max_iter: int = MAX_ITER) -> CoxFit:
    """Newton-Raphson maximisation of the Efron partial likelihood from beta = 0.

    Raises :class:`SingularInformation` or :class:`NonConvergence`; both are
    treated as analysis-model failures by the callers.
    """
    x = np.asarray(x, dtype=float)
    s = np.asarray(s, dtype=float)
    delta = np.asarray(delta, dtype=np.int8)
    n, p = x.shape
    if np.isnan(x).any():
        raise ValueError("Cox model input contains missing covariates")
    if n <= p:
        raise SingularInformation(f"{n} subjects for {p} coefficients")
    if not delta.any():
        raise SingularInformation("no events")
    center = x.mean(axis=0)
    xs, ss, ds = _sorted_inputs(x - center, s, delta)
    efron = kernels.cox_efron

    beta = np.zeros(p)
    ll, grad, info = efron(xs, ss, ds, beta)
    converged = False
    it = 0
    for it in range(1, max_iter + 1):
        step = _newton_step(info, grad)
        for _ in range(MAX_HALVINGS + 1):
            new_beta = beta + step
            new_ll, new_grad, new_info = efron(xs, ss, ds, new_beta)
            if np.isfinite(new_ll) and new_ll >= ll:
                break
            step = step / 2.0
        else:
            # no ascent direction left: already at the maximum to working precision
            converged = True
            break
        change = abs(new_ll - ll) / abs(new_ll) if new_ll != 0 else abs(new_ll - ll)
        beta, ll, grad, info = new_beta, new_ll, new_grad, new_info
        if change < LOGLIK_RTOL:
            converged = True
            break
    if not converged:
        raise NonConvergence(f"no convergence in {max_iter} Newton iterations")
    if not np.all(np.isfinite(beta)):
        raise NonConvergence("non-finite coefficient")
    pending = np.abs(_newton_step(info, grad))
    infinite = (pending > INF_STEP_ABS) & (pending > INF_STEP_REL * np.abs(beta))
    if infinite.any():
        cols = ", ".join(str(j + 1) for j in np.flatnonzero(infinite))
        raise NonConvergence(f"coefficient may be infinite for column(s) {cols}")
    times, hazard = breslow_baseline(beta, x, s, delta)
    return CoxFit(beta, float(ll), True, it, times, hazard)


def breslow_baseline(beta, x, s, delta):
    """Distinct event times and the cumulative baseline hazard at each."""
    beta = np.asarray(beta, dtype=float)
    x = np.asarray(x, dtype=float)
    s = np.asarray(s, dtype=float)
    delta = np.asarray(delta)
    order = np.argsort(s, kind="stable")
    s_sorted = s[order]
    w = np.exp(x[order] @ beta)
    at_risk = np.cumsum(w[::-1])[::-1]
    ev = delta[order] != 0
    times = np.unique(s_sorted[ev])
    d = np.bincount(np.searchsorted(times, s_sorted[ev]), minlength=times.size)
    denom = at_risk[np.searchsorted(s_sorted, times, side="left")]
    return times, np.cumsum(d / denom)


def predict_risk(fit: CoxFit, x_new, t: float) -> np.ndarray:
    """Event probability by ``t``: ``1 - exp(-H0(t) exp(b'x))``."""
    h0 = float(fit.cumulative_hazard(t))
    return -np.expm1(-h0 * np.exp(np.asarray(x_new, dtype=float) @ fit.beta))


def km_censoring(s, delta) -> KmCurve:
    """Reverse Kaplan-Meier: G(t) = P(C > t), censorings treated as events."""
    s = np.asarray(s, dtype=float)
    cens = np.asarray(delta) == 0
    times = np.unique(s[cens])
    if times.size == 0:
        return KmCurve(np.empty(0), np.empty(0))
    s_sorted = np.sort(s)
    at_risk = s.size - np.searchsorted(s_sorted, times, side="left")
    c_sorted = np.sort(s[cens])
    count = np.searchsorted(c_sorted, times, side="right") - np.searchsorted(c_sorted, times, side="left")
    return KmCurve(times, np.cumprod(1.0 - count / at_risk))
