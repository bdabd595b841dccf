"""Trend test for INARCH(1) count series.

Observations ``y[0..n]``. The statistic is the least-squares slope against
centred, unit-norm time weights,

    theta = sum_{t=1..n} w_t y_t,   w_t = (t - (n+1)/2) / sqrt(sum_s (s - (n+1)/2)^2),

which is asymptotically ``N(0, b0 / (1 - a)^3)`` under a stationary
INARCH(1) with ``lam_t = a y_{t-1} + b0``. The variance is estimated by
plugging in OLS estimates from the regression of ``y_t`` on
``(y_{t-1}, 1, t)``, and the null is rejected when
``theta / sigma > z_{1-alpha}``.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import asdict, dataclass
from typing import NamedTuple

import numpy as np
from scipy.linalg import qr, solve_triangular
from scipy.stats import norm

from .exceptions import DegenerateDesignError, ParameterError

INVALID_PLUGIN = "invalid-plugin"
MAX_CONDITION = 1e12


def orthogonal_weights(n: int) -> np.ndarray:
    if n < 2:
        raise ParameterError("need n >= 2 for trend weights")
    c = np.arange(1, n + 1) - (n + 1) / 2.0
    return c / math.sqrt(float(np.dot(c, c)))


def theta_hat(y) -> float:
    """``sum_t w_t y_t`` over the series passed in (``y_1..y_n``)."""
    y = np.asarray(y, dtype=float)
    if y.ndim != 1 or len(y) < 2:
        raise ParameterError("theta_hat needs a series of length >= 2")
    return float(np.dot(orthogonal_weights(len(y)), y))


class OlsFit(NamedTuple):
    a_hat: float
    b0_hat: float
    b1_hat: float


def ols_fit(y) -> OlsFit:
    """Least squares of ``y_t`` on ``(y_{t-1}, 1, t)``, ``t = 1..n``, via QR.

    Raises:
        DegenerateDesignError: if the design is singular or badly conditioned
            (for example a constant series).
    """
    y = np.asarray(y, dtype=float)
    n = len(y) - 1
    if n < 4:
        raise ParameterError("OLS needs y_0..y_n with n >= 4")
    t = np.arange(1, n + 1, dtype=float)
    X = np.column_stack([y[:-1], np.ones(n), t])
    target = y[1:]
    # column scaling keeps the condition check about collinearity, not units
    scale = np.linalg.norm(X, axis=0)
    if np.any(scale == 0):
        raise DegenerateDesignError("degenerate design: zero column")
    Xs = X / scale
    Q, R = qr(Xs, mode="economic")
    diag = np.abs(np.diag(R))
    if diag.min() <= diag.max() / MAX_CONDITION or np.linalg.cond(R) > MAX_CONDITION:
        raise DegenerateDesignError("degenerate design: regressors are (nearly) collinear")
    coef = solve_triangular(R, Q.T @ target) / scale
    return OlsFit(float(coef[0]), float(coef[1]), float(coef[2]))


@dataclass(frozen=True)
class TrendTestResult:
    theta_hat: float
    a_hat: float
    b0_hat: float
    b1_hat: float
    sigma_hat: float
    statistic: float
    p_value: float
    alpha: float
    critical: float
    reject: bool | None
    n: int
    flags: tuple[str, ...] = ()

    @property
    def valid(self) -> bool:
        return INVALID_PLUGIN not in self.flags

    def to_dict(self) -> dict:
        d = asdict(self)
        d["flags"] = list(self.flags)
        return d


def trend_test(y, alpha: float = 0.1) -> TrendTestResult:
    """One-sided test of no trend against an increasing trend.

    ``y`` holds ``y_0..y_n``; the statistic uses ``y_1..y_n`` and the OLS
    fit the full stretch. When ``a_hat >= 1`` or ``b0_hat <= 0`` the
    variance plug-in is undefined: the result carries the
    ``invalid-plugin`` flag, NaN statistic and ``reject=None``.
    """
    y = np.asarray(y, dtype=float)
    n = len(y) - 1
    if n < 10:
        raise ParameterError("trend test needs n >= 10")
    if not 0 < alpha <= 0.5:
        raise ParameterError("alpha must lie in (0, 0.5]")
    theta = theta_hat(y[1:])
    fit = ols_fit(y)
    crit = float(norm.isf(alpha))
    if fit.a_hat >= 1 or fit.b0_hat <= 0:
        nan = math.nan
        return TrendTestResult(theta, *fit, nan, nan, nan, alpha, crit, None, n, (INVALID_PLUGIN,))
    sigma = math.sqrt(fit.b0_hat / (1.0 - fit.a_hat) ** 3)
    stat = theta / sigma
    return TrendTestResult(theta, *fit, sigma, stat, float(norm.sf(stat)), alpha, crit,
                           bool(stat > crit), n)


class SeasonalAdjustment(NamedTuple):
    adjusted: np.ndarray
    profile: np.ndarray


def seasonal_adjust(y, period: int) -> SeasonalAdjustment:
    """Remove an additive periodic component.

    A centred moving average over one period (a 2 x period average for
    even periods) estimates the local level; the residuals are averaged by
    phase ``t mod period`` and centred to sum zero. The profile is then
    subtracted and the series shifted so that its mean is unchanged.
    """
    y = np.asarray(y, dtype=float)
    if period < 2:
        raise ParameterError("period must be >= 2")
    if len(y) < 2 * period:
        raise ParameterError("series must cover at least two periods")
    if period % 2:
        kernel = np.full(period, 1.0 / period)
    else:
        kernel = np.r_[0.5, np.ones(period - 1), 0.5] / period
    half = len(kernel) // 2
    level = np.convolve(y, kernel, mode="valid")
    idx = np.arange(half, len(y) - half)
    resid = y[idx] - level
    phase = idx % period
    means = np.array([resid[phase == j].mean() for j in range(period)])
    profile = means - means.mean()
    tiled = profile[np.arange(len(y)) % period]
    adjusted = y - tiled + tiled.mean()
    if np.mean(adjusted < 0) > 0.05:
        warnings.warn("more than 5% of seasonally adjusted values are negative", stacklevel=2)
    return SeasonalAdjustment(adjusted, profile)


class InarchMoments(NamedTuple):
    mean: float
    variance: float
    sigma2: float
    a: float
    b0: float

    def autocov(self, h: int) -> float:
        return self.a ** abs(h) * self.b0 / ((1 - self.a) ** 2 * (1 + self.a))


def stationary_moments_inarch1(a: float, b0: float) -> InarchMoments:
    """Mean, variance, autocovariances and long-run variance of a stationary INARCH(1)."""
    if not 0 < a < 1:
        raise ParameterError("need 0 < a < 1")
    if b0 < 0:
        raise ParameterError("need b0 >= 0")
    var = b0 / ((1 - a) ** 2 * (1 + a))
    return InarchMoments(b0 / (1 - a), var, b0 / (1 - a) ** 3, a, b0)
