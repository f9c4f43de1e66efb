import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

import oracles
from bootimpute.errors import MetricUndefined, NoCases, NoControls, ZeroWeight
from bootimpute.metrics import CASE, CENSORED, CONTROL, auc_td, brier_score, classify_at_horizon, score
from bootimpute.survival import fit_cox, km_censoring


def test_classify():
    status = classify_at_horizon([1.0, 2.0, 5.0, 6.0, 5.0], [1, 0, 1, 0, 0], 5.0)
    np.testing.assert_array_equal(status, [CASE, CENSORED, CASE, CONTROL, CENSORED])
    with pytest.raises(ValueError):
        classify_at_horizon([1.0], [1], 0.0)


def test_hand_computed_example():
    # subject 2 censored at 1.5 (4 of 5 at risk remain): G(t) = 0.75 after it
    s = np.array([1.0, 1.5, 2.0, 3.0, 4.0])
    delta = np.array([1, 0, 1, 0, 1])
    risk = np.array([0.9, 0.1, 0.4, 0.2, 0.5])
    g = km_censoring(s, delta)
    # cases at 1 (w=1) and 2 (w=1/0.75); controls at t=2.5: s=3, s=4 (w=1/0.75 each)
    # the case at 2 (risk 0.4) is outranked by the control at 4 (risk 0.5)
    auc = auc_td(risk, s, delta, 2.5, g)
    assert auc == pytest.approx((2 + 1 / 0.75) / (2 + 2 / 0.75), rel=1e-14)
    brier = brier_score(risk, s, delta, 2.5, g)
    expected = (0.1 ** 2 + 0.6 ** 2 / 0.75 + 0.2 ** 2 / 0.75 + 0.5 ** 2 / 0.75) / 5
    assert brier == pytest.approx(expected, rel=1e-14)


@settings(max_examples=200, deadline=None)
@given(seed=st.integers(0, 2**31), n=st.integers(2, 15))
def test_matches_brute_force(seed, n):
    rng = np.random.default_rng(seed)
    s = rng.integers(1, 8, n).astype(float)
    delta = rng.integers(0, 2, n)
    risk = rng.choice([0.1, 0.3, 0.5, 0.7], n)
    t = 4.0
    g = km_censoring(s, delta)
    try:
        b = brier_score(risk, s, delta, t, g)
    except ZeroWeight:
        return
    assert b == pytest.approx(oracles.ipcw_brier(risk, s, delta, t), abs=1e-12)
    try:
        a = auc_td(risk, s, delta, t, g)
    except MetricUndefined:
        return
    assert a == pytest.approx(oracles.ipcw_auc(risk, s, delta, t), abs=1e-12)


def test_auc_invariant_to_monotone_transform():
    rng = np.random.default_rng(1)
    s = rng.exponential(3, 60)
    delta = rng.integers(0, 2, 60)
    risk = rng.random(60)
    g = km_censoring(s, delta)
    assert auc_td(risk, s, delta, 2.0, g) == pytest.approx(auc_td(np.sqrt(risk), s, delta, 2.0, g), abs=1e-15)


def test_auc_complement():
    rng = np.random.default_rng(2)
    s = rng.exponential(3, 60)
    delta = rng.integers(0, 2, 60)
    risk = rng.random(60)
    g = km_censoring(s, delta)
    assert auc_td(risk, s, delta, 2.0, g) + auc_td(-risk, s, delta, 2.0, g) == pytest.approx(1.0)


def test_undefined_auc():
    s = np.array([3.0, 4.0])
    g = km_censoring(s, [0, 0])
    with pytest.raises(NoCases):
        auc_td([0.2, 0.3], s, [0, 0], 2.0, g)
    s = np.array([1.0, 1.5])
    g = km_censoring(s, [1, 1])
    with pytest.raises(NoControls):
        auc_td([0.2, 0.3], s, [1, 1], 2.0, g)


def test_zero_weight():
    # the last censoring empties G before the case at 3
    s = np.array([1.0, 3.0])
    delta = np.array([0, 1])
    g = km_censoring(np.array([1.0]), np.array([0]))
    with pytest.raises(ZeroWeight):
        brier_score([0.5, 0.5], s, delta, 4.0, g)


def test_score_bundle():
    rng = np.random.default_rng(3)
    x = rng.standard_normal((300, 2))
    t = rng.exponential(1 / np.exp(x @ [0.8, -0.5]))
    c = rng.exponential(2.0, 300)
    s, delta = np.minimum(t, c), (t <= c).astype(int)
    fit = fit_cox(x, s, delta)
    sp = score(fit, x, s, delta, 1.0)
    assert 0.6 < sp.auc < 1.0
    assert 0 < sp.brier < 0.25
    assert sp.n_cases == int(np.sum((s <= 1) & (delta == 1)))
    assert sp.n_controls == int(np.sum(s > 1))
