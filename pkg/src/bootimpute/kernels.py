"""Hot numeric kernels, each with an ``@njit`` loop form and a numpy form.

``cox_efron`` is bound to the numba variant unless ``BIV_DISABLE_NUMBA`` is
set or numba is unavailable. ``auc_counts`` always uses numpy: searchsorted
beats the compiled binary search (see ``benchmarks/bench_kernels.py``). Both
variants stay importable (``*_loop`` / ``*_numpy``) so tests and the
benchmark can compare them directly.
"""

from __future__ import annotations

import numpy as np

from ._accel import USE_NUMBA, njit

# ---------------------------------------------------------------------------
# Efron partial likelihood: value, score and information.
# Inputs must be sorted by ascending time.
# ---------------------------------------------------------------------------


def _cox_efron_loop(x, s, delta, beta):
    n, p = x.shape
    eta = np.empty(n)
    for i in range(n):
        acc = 0.0
        for a in range(p):
            acc += x[i, a] * beta[a]
        eta[i] = acc
    shift = eta.max() if n > 0 else 0.0
    w = np.exp(eta - shift)

    loglik = 0.0
    grad = np.zeros(p)
    info = np.zeros((p, p))
    s0 = 0.0
    s1 = np.zeros(p)
    s2 = np.zeros((p, p))
    t1 = np.zeros(p)
    t2 = np.zeros((p, p))
    d1 = np.zeros(p)

    i = n - 1
    while i >= 0:
        t = s[i]
        t0 = 0.0
        t1[:] = 0.0
        t2[:, :] = 0.0
        d = 0
        j = i
        while j >= 0 and s[j] == t:
            wj = w[j]
            s0 += wj
            for a in range(p):
                xa = wj * x[j, a]
                s1[a] += xa
                for b in range(a + 1):
                    s2[a, b] += xa * x[j, b]
            if delta[j] != 0:
                d += 1
                t0 += wj
                loglik += eta[j]
                for a in range(p):
                    xa = wj * x[j, a]
                    t1[a] += xa
                    grad[a] += x[j, a]
                    for b in range(a + 1):
                        t2[a, b] += xa * x[j, b]
            j -= 1
        for l in range(d):
            f = l / d
            den = s0 - f * t0
            loglik -= np.log(den) + shift
            for a in range(p):
                d1[a] = (s1[a] - f * t1[a]) / den
                grad[a] -= d1[a]
            for a in range(p):
                for b in range(a + 1):
                    info[a, b] += (s2[a, b] - f * t2[a, b]) / den - d1[a] * d1[b]
        i = j
    for a in range(p):
        for b in range(a):
            info[b, a] = info[a, b]
    return loglik, grad, info


# numpy error model: an underflowed risk set gives a non-finite loglik (rejected by
# step-halving) instead of raising ZeroDivisionError
cox_efron_loop = njit(cache=True, error_model="numpy")(_cox_efron_loop)


def cox_efron_numpy(x, s, delta, beta):
    n, p = x.shape
    eta = x @ beta
    shift = eta.max() if n else 0.0
    w = np.exp(eta - shift)

    # risk-set sums at each row: suffix sums evaluated at the first row of its tie group
    first = np.r_[True, s[1:] != s[:-1]]
    start = np.flatnonzero(first)
    group = np.cumsum(first) - 1
    wx = w[:, None] * x
    wxx = wx[:, :, None] * x[:, None, :]
    s0 = np.cumsum(w[::-1])[::-1][start]
    s1 = np.cumsum(wx[::-1], axis=0)[::-1][start]
    s2 = np.cumsum(wxx[::-1], axis=0)[::-1][start]

    ev = np.flatnonzero(delta != 0)
    if ev.size == 0:
        return 0.0, np.zeros(p), np.zeros((p, p))
    g = group[ev]
    ng = start.size
    d = np.bincount(g, minlength=ng)
    t0 = np.bincount(g, weights=w[ev], minlength=ng)
    t1 = np.zeros((ng, p))
    np.add.at(t1, g, wx[ev])
    t2 = np.zeros((ng, p, p))
    np.add.at(t2, g, wxx[ev])

    # rank of each event within its tie group: 0, 1, ..., d-1
    first_ev = np.r_[True, g[1:] != g[:-1]]
    grp_start = np.maximum.accumulate(np.where(first_ev, np.arange(ev.size), 0))
    frac = (np.arange(ev.size) - grp_start) / d[g]

    den = s0[g] - frac * t0[g]
    with np.errstate(divide="ignore", invalid="ignore"):
        m1 = (s1[g] - frac[:, None] * t1[g]) / den[:, None]
        m2 = (s2[g] - frac[:, None, None] * t2[g]) / den[:, None, None]
        loglik = float(eta[ev].sum() - np.sum(np.log(den) + shift))
    grad = x[ev].sum(axis=0) - m1.sum(axis=0)
    info = m2.sum(axis=0) - m1.T @ m1
    return loglik, grad, info


# ---------------------------------------------------------------------------
# IPCW AUC numerator: for every case, the number of controls it outranks
# (ties count one half). Control weights are constant and cancel.
# ---------------------------------------------------------------------------


def _auc_counts_loop(case_risk, control_risk):
    ctrl = np.sort(control_risk)
    m = ctrl.size
    out = np.empty(case_risk.size)
    for i in range(case_risk.size):
        r = case_risk[i]
        lo, hi = 0, m
        while lo < hi:  # first index with ctrl >= r
            mid = (lo + hi) // 2
            if ctrl[mid] < r:
                lo = mid + 1
            else:
                hi = mid
        below = lo
        hi = m
        while lo < hi:  # first index with ctrl > r
            mid = (lo + hi) // 2
            if ctrl[mid] <= r:
                lo = mid + 1
            else:
                hi = mid
        out[i] = below + 0.5 * (lo - below)
    return out


auc_counts_loop = njit(cache=True)(_auc_counts_loop)


def auc_counts_numpy(case_risk, control_risk):
    ctrl = np.sort(control_risk)
    below = np.searchsorted(ctrl, case_risk, side="left")
    upto = np.searchsorted(ctrl, case_risk, side="right")
    return below + 0.5 * (upto - below)


cox_efron = cox_efron_loop if USE_NUMBA else cox_efron_numpy
auc_counts = auc_counts_numpy

BACKEND = "numba" if USE_NUMBA else "numpy"
