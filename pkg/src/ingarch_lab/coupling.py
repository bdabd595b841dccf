"""Poisson couplings and the three-phase coupled-chain simulation.

The coupled simulation runs two copies of a model:

1. ``t <= k``: fully independent randomness, so ``lam[k+1]`` and
   ``lam'[k+1]`` are independent copies.
2. ``k < t < k+n``: shared covariates; counts coupled so that their
   difference has the sign of the intensity difference (additive coupling
   by default, comonotone for the log-linear family, or maximal).
3. ``t >= k+n``: shared covariates, maximal coupling of counts. The run
   records the first time the counts differ and stops early once both
   intensities agree exactly (the futures then coincide).

The fraction of runs with a mismatch in phase 3 estimates an upper bound
for the beta-mixing coefficient ``beta(k, n)``.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .exceptions import ExplosionError, ParameterError
from .models import (
    DEFAULT_CAP,
    Family,
    ModelSpec,
    Path,
    draw_covariate,
    intensity_step,
    poisson_pmf_range,
    poisson_window,
)
from .rng import stream

SQRT_2_OVER_E = math.sqrt(2.0 / math.e)
MAX_HORIZON = 10**6


# ---------------------------------------------------------------------------
# distances


def _pmf_pair(lam: float, lam2: float) -> tuple[int, np.ndarray, np.ndarray]:
    lo, hi = poisson_window(lam, lam2)
    return lo, poisson_pmf_range(lam, lo, hi), poisson_pmf_range(lam2, lo, hi)


def tv_poisson(lam: float, lam2: float) -> float:
    """Total variation distance between ``Pois(lam)`` and ``Pois(lam2)``."""
    if not (math.isfinite(lam) and math.isfinite(lam2)):
        raise ParameterError("intensities must be finite")
    if lam < 0 or lam2 < 0:
        raise ParameterError("intensities must be >= 0")
    if lam == lam2:
        return 0.0
    _, p, q = _pmf_pair(lam, lam2)
    # half the l1 distance: no cancellation as in 1 - sum(min), and exactly symmetric
    return float(min(1.0, 0.5 * np.abs(p - q).sum()))


class MetricKind(str, Enum):
    ABS = "abs"
    SQRT_SCALED = "sqrt_scaled"
    HYBRID = "hybrid"


@dataclass(frozen=True)
class MetricSpec:
    """Distance on intensities dominating the Poisson TV distance.

    ``abs``: ``|l - l'|``; ``sqrt_scaled``: ``sqrt(2/e) |sqrt l - sqrt l'|``;
    ``hybrid``: ``min(|l - l'| / M, |sqrt l - sqrt l'|)``.
    """

    kind: MetricKind = MetricKind.ABS
    M: float | None = None

    def __post_init__(self):
        object.__setattr__(self, "kind", MetricKind(self.kind))
        if self.kind is MetricKind.HYBRID and not (self.M is not None and self.M > 0):
            raise ParameterError("hybrid metric needs M > 0")

    @classmethod
    def hybrid(cls, M: float) -> MetricSpec:
        return cls(MetricKind.HYBRID, M)

    def __call__(self, lam: float, lam2: float) -> float:
        return metric_eval(self, lam, lam2)


def metric_eval(metric: MetricSpec, lam: float, lam2: float) -> float:
    if lam < 0 or lam2 < 0:
        raise ParameterError("intensities must be >= 0")
    if metric.kind is MetricKind.ABS:
        return abs(lam - lam2)
    root = abs(math.sqrt(lam) - math.sqrt(lam2))
    if metric.kind is MetricKind.SQRT_SCALED:
        return SQRT_2_OVER_E * root
    return min(abs(lam - lam2) / metric.M, root)


# ---------------------------------------------------------------------------
# couplings of two Poisson counts


def _invert(pmf: np.ndarray, u):
    cdf = np.cumsum(pmf)
    idx = np.searchsorted(cdf, np.asarray(u) * cdf[-1], side="right")
    return np.minimum(idx, len(pmf) - 1)


def maximal_coupling_poisson(lam: float, lam2: float, rng: np.random.Generator, size=None):
    """Draw ``(Y, Y')`` with Poisson marginals and ``P(Y != Y') = TV``.

    With probability ``1 - TV`` one value is drawn from the normalised
    overlap ``min(p, q)`` and returned twice; otherwise the two values are
    drawn independently from the normalised residuals ``p - min`` and
    ``q - min``, which live on disjoint sides so ``Y - Y'`` has the sign
    of ``lam - lam2``.
    """
    if lam == lam2:
        y = rng.poisson(lam, size)
        return (y, y.copy()) if size is not None else (int(y), int(y))
    lo, p, q = _pmf_pair(lam, lam2)
    m = np.minimum(p, q)
    r1 = p - m
    r2 = q - m
    tv = min(r1.sum(), r2.sum())
    overlap = m.sum()
    if size is None:
        u = rng.random()
        if u < tv or overlap == 0:
            u1, u2 = rng.random(2)
            return int(lo + _invert(r1, u1)), int(lo + _invert(r2, u2))
        v = int(lo + _invert(m, rng.random()))
        return v, v
    u = rng.random(size)
    split = (u < tv) if overlap > 0 else np.ones(size, dtype=bool)
    shared = lo + _invert(m, rng.random(size)) if overlap > 0 else np.zeros(size, dtype=np.int64)
    y = shared.copy()
    y2 = shared.copy()
    ns = int(split.sum())
    if ns:
        y[split] = lo + _invert(r1, rng.random(ns))
        y2[split] = lo + _invert(r2, rng.random(ns))
    return y, y2


def additive_coupling_poisson(lam: float, lam2: float, rng: np.random.Generator, size=None):
    """``Y = Y' + W`` with ``W ~ Pois(lam - lam2)`` when ``lam >= lam2`` (and symmetrically).

    ``E|Y - Y'| = |lam - lam2|`` and the difference has the sign of ``lam - lam2``.
    """
    if lam >= lam2:
        base = rng.poisson(lam2, size)
        w = rng.poisson(lam - lam2, size)
        out = (base + w, base)
    else:
        base = rng.poisson(lam, size)
        w = rng.poisson(lam2 - lam, size)
        out = (base, base + w)
    if size is None:
        return int(out[0]), int(out[1])
    return out


def comonotone_coupling_poisson(lam: float, lam2: float, rng: np.random.Generator, size=None):
    """Quantile coupling from one shared uniform; monotone in the intensity."""
    if lam == lam2:
        y = rng.poisson(lam, size)
        return (y, y.copy()) if size is not None else (int(y), int(y))
    lo, p, q = _pmf_pair(lam, lam2)
    u = rng.random(size)
    y, y2 = lo + _invert(p, u), lo + _invert(q, u)
    if size is None:
        return int(y), int(y2)
    return y, y2


class PhaseTwoCoupling(str, Enum):
    ADDITIVE = "additive"
    MAXIMAL = "maximal"
    COMONOTONE = "comonotone"


_COUPLERS = {
    PhaseTwoCoupling.ADDITIVE: additive_coupling_poisson,
    PhaseTwoCoupling.MAXIMAL: maximal_coupling_poisson,
    PhaseTwoCoupling.COMONOTONE: comonotone_coupling_poisson,
}


def default_phase_two(model: ModelSpec) -> PhaseTwoCoupling:
    if model.family is Family.LOGLINEAR:
        return PhaseTwoCoupling.COMONOTONE
    return PhaseTwoCoupling.ADDITIVE


# ---------------------------------------------------------------------------
# coupled chains


@dataclass(frozen=True, eq=False)
class CoupledRun:
    path_a: Path
    path_b: Path
    k: int
    n: int
    first_mismatch: int | None
    coalesced_at: int | None
    horizon: int
    seed: tuple[int, ...] = ()

    @property
    def censored(self) -> bool:
        """Horizon reached with neither a count mismatch nor coalescence."""
        return self.first_mismatch is None and self.coalesced_at is None

    @property
    def mismatch_or_censored(self) -> bool:
        return self.first_mismatch is not None or self.censored

    def summary_row(self) -> dict:
        return {
            "seed": ":".join(str(s) for s in self.seed),
            "k": self.k,
            "n": self.n,
            "first_mismatch": "" if self.first_mismatch is None else self.first_mismatch,
            "coalesced_at": "" if self.coalesced_at is None else self.coalesced_at,
            "censored": int(self.censored),
        }


def coupled_runs_to_csv(runs, target=None) -> str:
    buf = io.StringIO()
    w = csv.DictWriter(buf, ["seed", "k", "n", "first_mismatch", "coalesced_at", "censored"],
                       lineterminator="\n")
    w.writeheader()
    for r in runs:
        w.writerow(r.summary_row())
    if target is not None:
        with open(target, "w") as fh:
            fh.write(buf.getvalue())
    return buf.getvalue()


def default_horizon(model: ModelSpec, k: int, n: int) -> int:
    """``k + n + 50 / (1 - margin)``, capped at 10**6."""
    try:
        margin = model.contraction_margin(horizon=k + n + 1000)
    except ParameterError:
        margin = 1.0
    if margin >= 1:
        return MAX_HORIZON
    return int(min(MAX_HORIZON, k + n + math.ceil(50.0 / (1.0 - margin))))


def _as_key(seed) -> tuple[int, ...]:
    return tuple(int(s) for s in seed) if isinstance(seed, (tuple, list)) else (int(seed),)


def simulate_coupled(
    model: ModelSpec,
    k: int,
    n: int,
    horizon: int | None = None,
    coupling_phase2: PhaseTwoCoupling | str | None = None,
    seed=0,
    *,
    lam0: float = 1.0,
    cap: float = DEFAULT_CAP,
    stop_at_mismatch: bool = True,
    stop_at_coalescence: bool = True,
) -> CoupledRun:
    """Run two coupled copies of ``model`` and record mismatch/coalescence.

    ``seed`` may be an int or a tuple of ints; chain A uses stream
    ``(*seed, 0)`` and chain B ``(*seed, 1)``. Phase-1 draws for each
    chain come from its own stream; shared draws from phase 2 on come from
    stream 0.

    Raises:
        ExplosionError: if an intensity exceeds ``cap``.
    """
    if k < 1 or n < 1:
        raise ParameterError("k and n must be >= 1")
    H = default_horizon(model, k, n) if horizon is None else int(horizon)
    if H < k + n:
        raise ParameterError("horizon must be >= k + n")
    if model.family is Family.LOGLINEAR and lam0 <= 0:
        raise ParameterError("log-linear chains need lam0 > 0")
    phase2 = default_phase_two(model) if coupling_phase2 is None else PhaseTwoCoupling(coupling_phase2)
    couple2 = _COUPLERS[phase2]

    key = _as_key(seed)
    rng_a = stream(*key, 0)
    rng_b = stream(*key, 1)
    mixed = model.family is Family.MIXED

    ya, yb, la, lb, za, zb = [], [], [], [], [], []
    lt_a = lt_b = float(lam0)
    first_mismatch = coalesced_at = None
    start3 = k + n

    for t in range(H + 1):
        if lt_a > cap or lt_b > cap:
            raise ExplosionError(f"explosion guard tripped at t={t}")
        la.append(lt_a)
        lb.append(lt_b)
        if t <= k:
            y1 = int(rng_a.poisson(lt_a))
            z1 = draw_covariate(model, t, rng_a)
            y2 = int(rng_b.poisson(lt_b))
            z2 = draw_covariate(model, t, rng_b)
        else:
            if t < start3:
                y1, y2 = couple2(lt_a, lt_b, rng_a)
            else:
                y1, y2 = maximal_coupling_poisson(lt_a, lt_b, rng_a)
            z1 = z2 = draw_covariate(model, t, rng_a)
        ya.append(y1)
        yb.append(y2)
        za.append(z1)
        zb.append(z2)
        if t >= start3:
            if coalesced_at is None and lt_a == lt_b:
                coalesced_at = t
                if stop_at_coalescence:
                    break
            if first_mismatch is None and y1 != y2:
                first_mismatch = t
                if stop_at_mismatch:
                    break
        if t < H:
            lt_a = intensity_step(model, t, y1, lt_a, z1)
            lt_b = intensity_step(model, t, y2, lt_b, z2)

    def mk(y, lam, z):
        zarr = np.array(z, dtype=float)
        if mixed:
            zarr = zarr.reshape(-1, 2)
        return Path(np.array(y, dtype=np.int64), np.array(lam, dtype=float), zarr, None, model)

    return CoupledRun(
        mk(ya, la, za), mk(yb, lb, zb), k, n, first_mismatch, coalesced_at, H, key,
    )


def backward_approx(model: ModelSpec, path: Path, t: int, k: int, lam_bar: float) -> float:
    """Intensity at ``t`` rebuilt from ``lam_bar`` at ``t - k`` and the recorded ``(y, z)``.

    For the linear family ``|lam[t] - approx| = b**k * |lam[t-k] - lam_bar|``.
    """
    if k < 0 or t - k < 0 or t >= len(path):
        raise ParameterError("insufficient history for backward approximation")
    if model.family is Family.MIXED or not model.is_time_homogeneous:
        raise ParameterError("backward approximation needs a time-homogeneous unmixed model")
    lam = float(lam_bar)
    for s in range(t - k, t):
        lam = intensity_step(model, s, int(path.y[s]), lam, path.z_at(s))
    return lam
