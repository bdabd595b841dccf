"""Trend statistic, OLS plug-in, seasonal adjustment and INARCH(1) moments."""

import math
import warnings
from fractions import Fraction

import mpmath as mp
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra import numpy as hnp
from scipy import stats

from ingarch_lab.exceptions import DegenerateDesignError, ParameterError
from ingarch_lab.experiments import simulate_trend_series
from ingarch_lab.trend import (
    INVALID_PLUGIN,
    ols_fit,
    orthogonal_weights,
    seasonal_adjust,
    stationary_moments_inarch1,
    theta_hat,
    trend_test,
)

# ---------------------------------------------------------------------------
# weights and statistic


def test_weights_small_cases():
    r = 1 / math.sqrt(2)
    np.testing.assert_allclose(orthogonal_weights(2), [-r, r], rtol=1e-15)
    np.testing.assert_allclose(orthogonal_weights(3), [-r, 0, r], rtol=1e-15, atol=1e-16)
    with pytest.raises(ParameterError):
        orthogonal_weights(1)


@settings(max_examples=100, deadline=None)
@given(st.integers(2, 5000))
def test_weights_centered_unit_increasing(n):
    w = orthogonal_weights(n)
    assert abs(w.sum()) < 1e-12
    assert abs((w**2).sum() - 1) < 1e-12
    assert np.all(np.diff(w) > 0)


def test_theta_examples():
    assert theta_hat(np.full(50, 7.0)) == pytest.approx(0, abs=1e-12)
    n, c = 40, 2.5
    t = np.arange(1, n + 1)
    assert theta_hat(c * t) == pytest.approx(c * math.sqrt(((t - (n + 1) / 2) ** 2).sum()), rel=1e-13)
    # exact rational oracle for y = (0, 1, 2, 4)
    y = [0, 1, 2, 4]
    cen = [Fraction(2 * s - 5, 2) for s in range(1, 5)]
    num = sum(ci * yi for ci, yi in zip(cen, y))
    den = sum(ci * ci for ci in cen)
    assert theta_hat(y) == pytest.approx(float(num) / math.sqrt(float(den)), rel=1e-15)
    with pytest.raises(ParameterError):
        theta_hat([3])


@settings(max_examples=100, deadline=None)
@given(hnp.arrays(float, st.integers(2, 300), elements=st.floats(0, 1e4)), st.floats(-1e3, 1e3),
       st.floats(0.1, 10))
def test_theta_shift_invariant_and_linear(y, shift, scale):
    base = theta_hat(y)
    tol = 1e-9 * (1 + np.abs(y).sum() + abs(shift) * len(y))
    assert abs(theta_hat(y + shift) - base) <= tol
    assert theta_hat(scale * y) == pytest.approx(scale * base, rel=1e-9, abs=tol)


# ---------------------------------------------------------------------------
# OLS


def _exact_series(a, b0, b1, n, y0=1.0):
    y = [y0]
    for t in range(1, n + 1):
        y.append(a * y[-1] + b0 + b1 * t)
    return np.array(y)


def test_ols_recovers_noiseless_coefficients():
    fit = ols_fit(_exact_series(0.5, 1.0, 0.1, 60, y0=0.0))
    assert fit.a_hat == pytest.approx(0.5, abs=1e-8)
    assert fit.b0_hat == pytest.approx(1.0, abs=1e-8)
    assert fit.b1_hat == pytest.approx(0.1, abs=1e-8)


def test_ols_degenerate_design():
    with pytest.raises(DegenerateDesignError, match="degenerate design"):
        ols_fit(np.full(30, 3.0))
    with pytest.raises(ParameterError):
        ols_fit(np.arange(4.0))


def _design(y):
    n = len(y) - 1
    return np.column_stack([y[:-1], np.ones(n), np.arange(1, n + 1)]), y[1:]


def test_ols_invariant_to_row_permutation():
    y = simulate_trend_series(0.4, 1.0, 0.05, 300, (3, 1)).astype(float)
    fit = np.array(ols_fit(y))
    X, target = _design(y)
    perm = np.random.default_rng(0).permutation(len(target))
    ref = np.linalg.lstsq(X[perm], target[perm], rcond=None)[0]
    np.testing.assert_allclose(fit, ref, rtol=1e-9, atol=1e-11)


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 2**32), a=st.floats(0, 0.8), b1=st.floats(0, 0.2), n=st.integers(20, 400))
def test_ols_residuals_orthogonal_to_design(seed, a, b1, n):
    y = simulate_trend_series(a, 1.0, b1, n, seed).astype(float)
    try:
        fit = ols_fit(y)
    except DegenerateDesignError:
        return
    X, target = _design(y)
    resid = target - X @ np.array(fit)
    rel = np.abs(X.T @ resid) / (np.linalg.norm(X, axis=0) * (np.linalg.norm(target) + 1))
    assert np.all(rel < 1e-8)


def test_ols_consistent_on_long_inarch():
    a_hats = [ols_fit(simulate_trend_series(0.5, 1.0, 0.0, 5000, (8, r)).astype(float)).a_hat
              for r in range(20)]
    assert abs(np.mean(a_hats) - 0.5) < 0.05


# ---------------------------------------------------------------------------
# trend test


def test_variance_plug_in():
    y = simulate_trend_series(0.5, 1.0, 0.0, 400, 12).astype(float)
    res = trend_test(y, 0.1)
    assert res.sigma_hat**2 == pytest.approx(res.b0_hat / (1 - res.a_hat) ** 3, rel=1e-12)
    assert res.statistic == pytest.approx(res.theta_hat / res.sigma_hat, rel=1e-15)
    assert res.theta_hat == pytest.approx(theta_hat(y[1:]), rel=1e-15)
    assert res.n == 400 and res.valid
    assert stationary_moments_inarch1(0.5, 1.0).sigma2 == pytest.approx(8.0)


def test_critical_value_and_p_value_accuracy():
    res = trend_test(simulate_trend_series(0.2, 1.0, 0.05, 100, 1).astype(float), 0.1)
    with mp.workdps(40):
        crit = float(mp.sqrt(2) * mp.erfinv(1 - 2 * mp.mpf("0.1")))
        p = float(mp.erfc(mp.mpf(res.statistic) / mp.sqrt(2)) / 2)
    assert abs(res.critical - crit) < 1e-10
    assert res.p_value == pytest.approx(p, rel=1e-12)


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 2**32), b1=st.sampled_from([0.0, 0.02, 0.1]),
       alpha=st.floats(0.01, 0.5))
def test_decision_rule(seed, b1, alpha):
    res = trend_test(simulate_trend_series(0.3, 1.0, b1, 80, seed).astype(float), alpha)
    if res.valid:
        assert res.reject == (res.statistic > res.critical)
        assert (res.p_value < alpha) == res.reject or math.isclose(res.p_value, alpha)
    else:
        assert res.reject is None


def test_invalid_plugin_flag():
    y = 2.0 ** np.arange(13)  # exact a = 2, b0 = 0
    res = trend_test(y, 0.1)
    assert INVALID_PLUGIN in res.flags and not res.valid
    assert res.reject is None and math.isnan(res.statistic)
    assert res.a_hat == pytest.approx(2.0)


def test_trend_test_argument_checks():
    y = simulate_trend_series(0.3, 1.0, 0.0, 50, 1).astype(float)
    with pytest.raises(ParameterError):
        trend_test(y[:10], 0.1)
    for alpha in (0.0, 0.6):
        with pytest.raises(ParameterError):
            trend_test(y, alpha)
    with pytest.raises(DegenerateDesignError):
        trend_test(np.full(40, 2.0), 0.1)


def test_to_dict_round_trip():
    res = trend_test(simulate_trend_series(0.3, 1.0, 0.0, 50, 1).astype(float), 0.1)
    d = res.to_dict()
    assert set(d) >= {"theta_hat", "a_hat", "b0_hat", "b1_hat", "sigma_hat", "statistic", "alpha",
                      "critical", "reject", "n", "p_value"}
    assert type(res)(**{**d, "flags": tuple(d["flags"])}) == res


def test_null_statistic_is_standard_normal():
    a, b0, n = 0.5, 1.0, 500
    sigma = math.sqrt(stationary_moments_inarch1(a, b0).sigma2)
    z = [theta_hat(simulate_trend_series(a, b0, 0.0, n, (21, r))[1:]) / sigma for r in range(2000)]
    assert stats.kstest(z, "norm").pvalue > 1e-3


# ---------------------------------------------------------------------------
# seasonal adjustment


def test_periodic_plus_constant_becomes_constant():
    prof = np.array([3.0, -1, 2, 0.5, -2, 4, -6.5])
    y = 10 + np.tile(prof, 9)
    adj = seasonal_adjust(y, 7)
    np.testing.assert_allclose(adj.adjusted, np.full(len(y), y.mean()), atol=1e-12)
    np.testing.assert_allclose(adj.profile, prof - prof.mean(), atol=1e-12)


def test_constant_series_unchanged():
    y = np.full(40, 5.0)
    np.testing.assert_allclose(seasonal_adjust(y, 7).adjusted, y, atol=1e-14)
    np.testing.assert_allclose(seasonal_adjust(y, 4).adjusted, y, atol=1e-14)


@pytest.mark.parametrize("period", [7, 4])
def test_sine_plus_trend_keeps_slope(period):
    t = np.arange(63, dtype=float)
    slope = 0.37
    y = 20 + slope * t + 5 * np.sin(2 * np.pi * t / period)
    adj = seasonal_adjust(y, period).adjusted
    fitted = np.polyfit(t, adj, 1)[0]
    assert fitted == pytest.approx(slope, rel=0.01)


@settings(max_examples=50, deadline=None)
@given(hnp.arrays(float, st.integers(14, 200), elements=st.floats(0, 1e3)), st.integers(2, 7))
def test_seasonal_mean_preserved_and_idempotent(y, period):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        once = seasonal_adjust(y, period).adjusted
        twice = seasonal_adjust(once, period).adjusted
    assert abs(once.mean() - y.mean()) <= 1e-9 * max(1.0, abs(y).max())
    assert np.max(np.abs(twice - once)) <= 1e-8 * max(1.0, abs(y).max())


def test_seasonal_errors_and_warning():
    with pytest.raises(ParameterError):
        seasonal_adjust(np.ones(13), 7)
    with pytest.raises(ParameterError):
        seasonal_adjust(np.ones(20), 1)
    y = np.r_[np.zeros(6), 100.0, np.zeros(28)]  # one isolated spike
    with pytest.warns(UserWarning, match="negative"):
        adj = seasonal_adjust(y, 7).adjusted
    assert np.mean(adj < 0) > 0.05


def test_pure_periodic_component_does_not_move_statistic():
    rng = np.random.default_rng(5)
    base = rng.poisson(10, 70).astype(float)
    prof = np.array([4.0, -2, 1, 0, -1, 3, -5])
    with_season = base + np.tile(prof, 10)
    a = seasonal_adjust(base, 7).adjusted
    b = seasonal_adjust(with_season, 7).adjusted
    np.testing.assert_allclose(a, b, atol=1e-10)


# ---------------------------------------------------------------------------
# INARCH(1) moments


def test_moments_plug_in():
    m = stationary_moments_inarch1(0.5, 1.0)
    assert m.mean == pytest.approx(2.0)
    assert m.autocov(0) == pytest.approx(8 / 3)
    assert m.variance == m.autocov(0)
    assert m.sigma2 == pytest.approx(8.0)
    for h in range(6):
        assert m.autocov(h + 1) / m.autocov(h) == pytest.approx(0.5)


def test_long_run_variance_is_sum_of_autocovariances():
    m = stationary_moments_inarch1(0.3, 2.0)
    total = m.autocov(0) + 2 * sum(m.autocov(h) for h in range(1, 400))
    assert total == pytest.approx(m.sigma2, rel=1e-12)


@pytest.mark.parametrize("a,b0", [(0.0, 1.0), (1.0, 1.0), (0.5, -1.0)])
def test_moments_domain(a, b0):
    with pytest.raises(ParameterError):
        stationary_moments_inarch1(a, b0)
