"""Closed-form and Monte Carlo bounds on beta-mixing coefficients.

Closed forms:

* generic contraction bound
  ``beta(n) <= L2**(n-1) / (1 - L1) * (M1 / (1 - L3) + M0)``;
* linear INGARCH with ``sup(a_t + b_t) < 1``: ``L1 = sup b_t``,
  ``L2 = sup(a_t + b_t)``, ``M = 2 (E lam0 + sup E z_t / (1 - L2))`` and
  ``beta(n) <= L2**(n-1) M / (1 - L1)``;
* the explosive-trend case with the hybrid metric, where the contraction
  factor ``rho(eps, M)`` is minimised numerically;
* the log-linear model, for which only the rate ``(|a| + |b|)**n`` is known.

The empirical estimator counts coupled runs that mismatch after the gap.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np
from scipy.optimize import minimize_scalar

from .coupling import simulate_coupled
from .exceptions import NoContractionError, ParameterError
from .models import ModelSpec, poisson_window
from .rng import parallel_map


@dataclass(frozen=True)
class ContractionConstants:
    L1: float
    L2: float
    L3: float
    M0: float
    M1: float

    @property
    def certified(self) -> bool:
        vals = (self.L1, self.L2, self.L3, self.M0, self.M1)
        return (
            all(math.isfinite(v) for v in vals)
            and all(0 <= v < 1 for v in (self.L1, self.L2, self.L3))
            and self.M0 >= 0
            and self.M1 >= 0
        )


def theorem21_bound(c: ContractionConstants, n: int) -> float:
    """Raw (unclamped) bound on ``beta(n)``."""
    if not c.certified:
        raise NoContractionError("no contraction: constants are not certified")
    if n < 1:
        raise ParameterError("gap n must be >= 1")
    return c.L2 ** (n - 1) / (1.0 - c.L1) * (c.M1 / (1.0 - c.L3) + c.M0)


def corollary31_constants(a_sup: float, b_sup: float, ez_sup: float,
                          e_lam0: float) -> tuple[ContractionConstants, float]:
    """Constants for the linear model under the absolute-value metric.

    Returned as generic constants with ``L3 = 0``, ``M0 = 2 E lam0`` and
    ``M1 = 2 sup E z / (1 - L2)``, so that ``M1 / (1 - L3) + M0`` equals
    the closed-form ``M``.
    """
    if min(a_sup, b_sup, ez_sup, e_lam0) < 0:
        raise ParameterError("inputs must be non-negative")
    L2 = a_sup + b_sup
    if not L2 < 1:
        raise NoContractionError(
            "no certified bound (a + b >= 1); use the hybrid-metric rate or the empirical estimator"
        )
    if not (math.isfinite(ez_sup) and math.isfinite(e_lam0)):
        raise NoContractionError("no certified bound: unbounded covariate mean or initial mean")
    M = 2.0 * (e_lam0 + ez_sup / (1.0 - L2))
    consts = ContractionConstants(L1=b_sup, L2=L2, L3=0.0, M0=2.0 * e_lam0,
                                  M1=2.0 * ez_sup / (1.0 - L2))
    return consts, M


def corollary31_bound(a_sup: float, b_sup: float, ez_sup: float, e_lam0: float, n: int) -> float:
    """``L2**(n-1) * M / (1 - L1)`` evaluated directly from the closed form."""
    L1, L2 = b_sup, a_sup + b_sup
    if not L2 < 1:
        raise NoContractionError("no certified bound (a + b >= 1)")
    M = 2.0 * (e_lam0 + ez_sup / (1.0 - L2))
    return L2 ** (n - 1) * M / (1.0 - L1)


def model_constants(model: ModelSpec, e_lam0: float,
                    horizon: int | None = None) -> tuple[ContractionConstants, float]:
    """Linear-metric constants for a linear or softplus model.

    The softplus link is 1-Lipschitz, so the linear constants carry over.
    """
    if model.family.value not in ("linear", "softplus"):
        raise ParameterError("automatic constants exist only for linear and softplus models")
    _, b_sup = model.coefficient_sups(horizon)
    L2 = model.contraction_margin(horizon)
    if not L2 < 1:
        raise NoContractionError("no certified bound: sup(a_t + b_t) >= 1")
    ez = model.covariate.sup_mean(horizon)
    if not math.isfinite(ez):
        raise NoContractionError("no certified bound: unbounded covariate mean")
    consts = ContractionConstants(L1=b_sup, L2=L2, L3=0.0, M0=2.0 * e_lam0, M1=2.0 * ez / (1.0 - L2))
    return consts, consts.M0 + consts.M1


@dataclass(frozen=True)
class BoundRow:
    n: int
    raw: float

    @property
    def clamped(self) -> float:
        return min(self.raw, 1.0)


@dataclass(frozen=True)
class MixingBoundReport:
    summary: str
    constants: ContractionConstants | None
    rows: tuple[BoundRow, ...]
    certified: bool
    notes: tuple[str, ...] = field(default=())

    def to_csv(self) -> str:
        from .models import fmt_float

        lines = ["n,raw_bound,clamped"]
        lines += [f"{r.n},{fmt_float(r.raw)},{fmt_float(r.clamped)}" for r in self.rows]
        return "\n".join(lines) + "\n"


def bound_report(c: ContractionConstants, n_max: int, summary: str = "") -> MixingBoundReport:
    rows = tuple(BoundRow(n, theorem21_bound(c, n)) for n in range(1, n_max + 1))
    return MixingBoundReport(summary, c, rows, c.certified)


# ---------------------------------------------------------------------------
# hybrid metric, explosive trends


def corollary32_rho(a: float, b: float, eps: float, M: float, *, strict: bool = False) -> float:
    """Contraction factor of the hybrid metric, as printed.

    The third term carries ``(1 - (1 - eps**2))**2 = eps**4`` while the
    second uses ``(1 - (1 - eps)**2)**2``. ``strict=True`` uses the latter
    in both places.
    """
    if min(a, b) < 0 or not a + b < 1:
        raise ParameterError("need a, b >= 0 and a + b < 1")
    s = math.sqrt(a + b)
    if not 0 < eps < 1 - s:
        raise ParameterError(f"eps must lie in (0, 1 - sqrt(a + b)) = (0, {1 - s:.6g})")
    if not M > 0:
        raise ParameterError("M must be > 0")
    d2 = (1.0 - (1.0 - eps) ** 2) ** 2
    d3 = d2 if strict else (1.0 - (1.0 - eps**2)) ** 2
    return (
        s / (1.0 - eps)
        + (1.0 - eps) * s / d2 * 4.0 / M**2
        + 1.0 / d3 * ((1.0 + 2.0 * eps) / eps) ** 2 * (math.sqrt(a) / M + math.sqrt(b) / M**2)
    )


class RhoOptimum(NamedTuple):
    rho: float
    eps: float
    M: float


def corollary32_optimize(a: float, b: float, *, m_min: float = 1.0, m_max: float = 1e8,
                         m_limit: float = 1e16, strict: bool = False) -> RhoOptimum:
    """Minimise ``rho(eps, M)`` over eps in ``(1e-3, 1 - sqrt(a+b) - 1e-3)`` and ``M``.

    The search uses a log grid on ``[m_min, m_max]``; if the best value is
    still ``>= 1`` the upper end is raised a hundredfold at a time up to
    ``m_limit``. The returned ``rho`` is ``corollary32_rho(a, b, eps, M)``
    re-evaluated at the reported optimum.
    """
    if min(a, b) < 0 or not a + b < 1:
        raise ParameterError("outside the hypothesis a, b >= 0 and a + b < 1")
    lo, hi = 1e-3, 1.0 - math.sqrt(a + b) - 1e-3
    if not lo < hi:
        raise ParameterError("a + b too close to 1 for the eps search range")

    def rho(e, m):
        return corollary32_rho(a, b, e, m, strict=strict)

    top = m_max
    while True:
        best = _optimise_rho(rho, lo, hi, m_min, top)
        if best.rho < 1 or top >= m_limit:
            break
        top = min(top * 100.0, m_limit)
    if not best.rho < 1:
        raise NoContractionError(f"minimal rho found is {best.rho:.6g} >= 1")
    return best


def _optimise_rho(rho, lo, hi, m_min, m_max) -> RhoOptimum:
    eps_grid = np.linspace(lo, hi, 200)
    m_grid = np.geomspace(m_min, m_max, 60)
    best = RhoOptimum(math.inf, lo, m_min)
    for m in m_grid:
        vals = [rho(e, m) for e in eps_grid]
        i = int(np.argmin(vals))
        if vals[i] < best.rho:
            best = RhoOptimum(vals[i], float(eps_grid[i]), float(m))
    # refine eps at the best M
    i = int(np.searchsorted(eps_grid, best.eps))
    a_ = eps_grid[max(i - 1, 0)]
    b_ = eps_grid[min(i + 1, len(eps_grid) - 1)]
    if b_ > a_:
        res = minimize_scalar(lambda e: rho(e, best.M), bounds=(a_, b_), method="bounded",
                              options={"xatol": 1e-12})
        if res.fun < best.rho:
            best = RhoOptimum(rho(float(res.x), best.M), float(res.x), best.M)
    return RhoOptimum(rho(best.eps, best.M), best.eps, best.M)


# ---------------------------------------------------------------------------
# log-linear model


class RateBound(NamedTuple):
    value: float
    note: str


RATE_ONLY = "rate-only: multiplicative constant uncertified"


def loglinear_rate(a: float, b: float, n: int) -> RateBound:
    """``(|a| + |b|)**n``; the multiplicative constant is not available in closed form."""
    r = abs(a) + abs(b)
    if not r < 1:
        raise NoContractionError("|a| + |b| >= 1: no mixing rate")
    return RateBound(r**n, RATE_ONLY)


def derivative_identity_check(lam: float, h: float | None = None) -> tuple[float, float]:
    """Numeric ``d/dlam E log(Y + 1)`` for ``Y ~ Pois(lam)`` next to ``(1 - e^-lam) / lam``.

    The derivative equals ``E log((Y + 2) / (Y + 1))``. Because
    ``log(1 + 1/(k+1)) <= 1/(k+1)`` it is bounded by
    ``E 1/(Y + 1) = (1 - e^-lam) / lam <= 1 / lam`` but is strictly smaller,
    by about ``0.22`` at ``lam = 0.5`` and ``0.005`` at ``lam = 10``. The
    returned pair lets callers compare both.
    """
    if not lam > 0:
        raise ParameterError("lam must be > 0")
    if h is None:
        h = 1e-4 * lam
    if not 0 < h <= 1e-3 * lam:
        raise ParameterError("need 0 < h <= 1e-3 * lam")
    lo, hi = poisson_window(lam - h, lam + h, tail=1e-16)
    k = np.arange(lo, hi + 1)
    logs = np.log1p(k)

    def mean_log(x):
        from .models import poisson_pmf_range

        return float(np.dot(poisson_pmf_range(x, lo, hi), logs))

    numeric = (mean_log(lam + h) - mean_log(lam - h)) / (2 * h)
    analytic = -math.expm1(-lam) / lam
    return numeric, analytic


# ---------------------------------------------------------------------------
# empirical upper bound


class BetaEstimate(NamedTuple):
    estimate: float
    se: float
    mismatches: int
    censored: int
    reps: int


def estimate_beta_upper(model: ModelSpec, k: int, n: int, reps: int, horizon: int | None = None,
                        seed: int = 0, *, lam0: float = 1.0, coupling_phase2=None,
                        workers: int = 1) -> BetaEstimate:
    """Fraction of coupled runs that mismatch (or hit the horizon) after the gap.

    Replication ``r`` uses the seed key ``(seed, r)``; the result does
    not depend on ``workers``.
    """
    if reps < 100:
        raise ParameterError("reps must be >= 100")

    def one(r):
        run = simulate_coupled(model, k, n, horizon, coupling_phase2, (seed, r), lam0=lam0)
        return run.first_mismatch is not None, run.censored

    flags = parallel_map(one, range(reps), workers)
    mism = sum(m for m, _ in flags)
    cens = sum(c for _, c in flags)
    est = (mism + cens) / reps
    return BetaEstimate(est, math.sqrt(est * (1 - est) / reps), mism, cens, reps)
