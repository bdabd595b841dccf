"""INGARCH(1,1) intensity recursions and conditional count laws.

A model is a recursion ``lam[t+1] = f_t(y[t], lam[t], z[t])`` together with
the law of the covariate ``z``. Counts are conditionally Poisson,
``y[t] | past ~ Pois(lam[t])``, with ``Pois(0)`` the point mass at zero.

Families:

* ``linear``     lam' = a_t*y + b_t*lam + z
* ``softplus``   lam' = s_c(a_t*y + b_t*lam + z),  s_c(x) = c*ln(1 + e^(x/c))
* ``loglinear``  log lam' = d + a*log(lam) + b*log(y + 1) + z
* ``mixed``      lam' = z2 * f~(y, lam, z1) with z2 ~ Bernoulli(p) or Gamma,
                 which makes the counts zero-inflated Poisson or negative
                 binomial given everything but z2.
"""

from __future__ import annotations

import configparser
import csv
import io
import math
import warnings
from collections.abc import Callable, Sequence
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path as FsPath
from typing import Union

import numpy as np
from scipy.special import gammaln

from .exceptions import ExplosionError, InvalidStateError, ParameterError
from .rng import stream

Schedule = Union[float, Sequence[float], Callable[[int], float]]

DEFAULT_CAP = 1e12
PMF_TAIL = 1e-12


class Family(str, Enum):
    LINEAR = "linear"
    SOFTPLUS = "softplus"
    LOGLINEAR = "loglinear"
    MIXED = "mixed"


class HorizonLimitedWarning(UserWarning):
    """A supremum over a time-varying schedule was taken over a finite horizon only."""


# ---------------------------------------------------------------------------
# schedules


def _is_constant(s: Schedule) -> bool:
    return isinstance(s, (int, float, np.floating, np.integer))


def schedule_value(s: Schedule, t: int) -> float:
    if _is_constant(s):
        return float(s)
    if callable(s):
        return float(s(t))
    try:
        return float(s[t])
    except IndexError:
        raise ParameterError(f"coefficient schedule has no value for t={t}") from None


def schedule_sup(s: Schedule, horizon: int | None = None, absolute: bool = False) -> float:
    """Supremum of a schedule. Non-constant schedules are only checked up to ``horizon``."""
    f = abs if absolute else (lambda v: v)
    if _is_constant(s):
        return f(float(s))
    if callable(s):
        if horizon is None:
            raise ParameterError("a horizon is required for the supremum of a callable schedule")
        vals = [f(float(s(t))) for t in range(horizon + 1)]
    else:
        seq = list(s)
        vals = [f(float(v)) for v in (seq if horizon is None else seq[: horizon + 1])]
    warnings.warn(
        "supremum of a time-varying schedule evaluated over the simulated horizon only",
        HorizonLimitedWarning,
        stacklevel=3,
    )
    return max(vals)


# ---------------------------------------------------------------------------
# covariates and mixing laws


@dataclass(frozen=True)
class CovariateSpec:
    """Law of the covariate sequence ``z_t``.

    Use the constructors ``zero``, ``constant``, ``exponential``,
    ``lognormal``, ``linear_trend`` and ``sequence`` rather than building
    instances by hand.
    """

    kind: str = "zero"
    value: float = 0.0
    mean_: float = 1.0
    mu: float = 0.0
    sigma: float = 1.0
    b0: float = 0.0
    b1: float = 0.0
    values: tuple[float, ...] = ()

    KINDS = ("zero", "constant", "iid_exponential", "iid_lognormal", "linear_trend", "sequence")

    def __post_init__(self):
        if self.kind not in self.KINDS:
            raise ParameterError(f"unknown covariate kind {self.kind!r}")
        if self.kind == "iid_exponential" and not self.mean_ > 0:
            raise ParameterError("exponential covariate needs mean > 0")
        if self.kind == "iid_lognormal" and not self.sigma > 0:
            raise ParameterError("lognormal covariate needs sigma > 0")
        if self.kind == "linear_trend" and (self.b0 < 0 or self.b1 < 0):
            raise ParameterError("linear trend covariate needs b0 >= 0 and b1 >= 0")
        if self.kind == "sequence" and not self.values:
            raise ParameterError("sequence covariate needs at least one value")

    @classmethod
    def zero(cls) -> CovariateSpec:
        return cls("zero")

    @classmethod
    def constant(cls, value: float) -> CovariateSpec:
        return cls("constant", value=float(value))

    @classmethod
    def exponential(cls, mean: float) -> CovariateSpec:
        return cls("iid_exponential", mean_=float(mean))

    @classmethod
    def lognormal(cls, mu: float, sigma: float) -> CovariateSpec:
        return cls("iid_lognormal", mu=float(mu), sigma=float(sigma))

    @classmethod
    def linear_trend(cls, b0: float, b1: float) -> CovariateSpec:
        return cls("linear_trend", b0=float(b0), b1=float(b1))

    @classmethod
    def sequence(cls, values: Sequence[float]) -> CovariateSpec:
        return cls("sequence", values=tuple(float(v) for v in values))

    @property
    def is_random(self) -> bool:
        return self.kind in ("iid_exponential", "iid_lognormal")

    @property
    def is_nonnegative(self) -> bool:
        if self.kind == "constant":
            return self.value >= 0
        if self.kind == "sequence":
            return min(self.values) >= 0
        return True

    def draw(self, t: int, rng: np.random.Generator) -> float:
        """Value of ``z_t``; deterministic kinds do not touch ``rng``."""
        k = self.kind
        if k == "zero":
            return 0.0
        if k == "constant":
            return self.value
        if k == "iid_exponential":
            return float(rng.exponential(self.mean_))
        if k == "iid_lognormal":
            return float(rng.lognormal(self.mu, self.sigma))
        if k == "linear_trend":
            return self.b0 + self.b1 * t
        try:
            return self.values[t]
        except IndexError:
            raise ParameterError(f"covariate sequence has no value for t={t}") from None

    def mean(self, t: int) -> float:
        k = self.kind
        if k == "iid_exponential":
            return self.mean_
        if k == "iid_lognormal":
            return math.exp(self.mu + 0.5 * self.sigma**2)
        if k == "linear_trend":
            return self.b0 + self.b1 * t
        return self.draw(t, None)  # deterministic

    def sup_mean(self, horizon: int | None = None) -> float:
        """``sup_t E z_t``; infinite for an unbounded trend."""
        if self.kind == "linear_trend":
            if self.b1 == 0:
                return self.b0
            return math.inf if horizon is None else self.b0 + self.b1 * horizon
        if self.kind == "sequence":
            vals = self.values if horizon is None else self.values[: horizon + 1]
            return max(vals)
        return self.mean(0)

    def exp2_moment_finite(self) -> bool | None:
        """Whether ``E exp(2 z)`` is finite; ``None`` when this cannot be decided."""
        if self.kind in ("zero", "constant", "sequence"):
            return True
        if self.kind == "iid_exponential":
            return 2 * self.mean_ < 1
        if self.kind == "iid_lognormal":
            return False
        return None


@dataclass(frozen=True)
class Mixing:
    """Multiplicative mixing variable ``z2`` for mixed Poisson models."""

    kind: str
    p: float = 0.5
    shape: float = 1.0
    rate: float = 1.0

    def __post_init__(self):
        if self.kind == "bernoulli":
            if not 0 < self.p < 1:
                raise ParameterError("Bernoulli mixing needs p in (0, 1)")
        elif self.kind == "gamma":
            if not (self.shape > 0 and self.rate > 0):
                raise ParameterError("Gamma mixing needs shape > 0 and rate > 0")
        else:
            raise ParameterError(f"unknown mixing kind {self.kind!r}")

    @classmethod
    def bernoulli(cls, p: float) -> Mixing:
        return cls("bernoulli", p=float(p))

    @classmethod
    def gamma(cls, shape: float, rate: float) -> Mixing:
        return cls("gamma", shape=float(shape), rate=float(rate))

    @property
    def mean(self) -> float:
        return self.p if self.kind == "bernoulli" else self.shape / self.rate

    def draw(self, rng: np.random.Generator, size=None):
        if self.kind == "bernoulli":
            u = rng.random(size)
            return (u < self.p).astype(float) if size is not None else float(u < self.p)
        return rng.gamma(self.shape, 1.0 / self.rate, size)


# ---------------------------------------------------------------------------
# model specification


@dataclass(frozen=True)
class ModelSpec:
    """Intensity recursion plus covariate law.

    ``a`` and ``b`` are coefficient schedules: a constant, a sequence indexed
    by time, or a callable ``t -> value``. ``c`` is the softplus scale and
    ``d`` the log-linear intercept. Mixed models wrap an inner ``base``
    model and draw ``z2`` from ``mixing``; their covariate is the base
    model's.
    """

    family: Family
    a: Schedule = 0.0
    b: Schedule = 0.0
    c: float = 1.0
    d: float = 0.0
    covariate: CovariateSpec = field(default_factory=CovariateSpec.zero)
    mixing: Mixing | None = None
    base: ModelSpec | None = None

    def __post_init__(self):
        object.__setattr__(self, "family", Family(self.family))
        for name in ("a", "b"):
            s = getattr(self, name)
            if not _is_constant(s) and not callable(s):
                object.__setattr__(self, name, tuple(float(v) for v in s))
        fam = self.family
        if fam is Family.MIXED:
            if self.base is None or self.mixing is None:
                raise ParameterError("mixed model needs a base model and a mixing law")
            if self.base.family is Family.MIXED:
                raise ParameterError("nested mixed models are not supported")
            object.__setattr__(self, "covariate", self.base.covariate)
            return
        if fam is Family.SOFTPLUS and not self.c > 0:
            raise ParameterError("softplus scale c must be > 0")
        if fam in (Family.LINEAR, Family.SOFTPLUS):
            for name in ("a", "b"):
                s = getattr(self, name)
                if _is_constant(s) and float(s) < 0 or isinstance(s, tuple) and min(s) < 0:
                    raise ParameterError(f"coefficient {name} must be >= 0")
            if not self.covariate.is_nonnegative:
                raise ParameterError("linear/softplus models need a non-negative covariate")

    # constructors -----------------------------------------------------------

    @classmethod
    def linear(cls, a: Schedule, b: Schedule, covariate: CovariateSpec | None = None) -> ModelSpec:
        return cls(Family.LINEAR, a=a, b=b, covariate=covariate or CovariateSpec.zero())

    @classmethod
    def softplus(cls, a: Schedule, b: Schedule, c: float = 1.0,
                 covariate: CovariateSpec | None = None) -> ModelSpec:
        return cls(Family.SOFTPLUS, a=a, b=b, c=c, covariate=covariate or CovariateSpec.zero())

    @classmethod
    def loglinear(cls, d: float, a: Schedule, b: Schedule,
                  covariate: CovariateSpec | None = None) -> ModelSpec:
        return cls(Family.LOGLINEAR, a=a, b=b, d=d, covariate=covariate or CovariateSpec.zero())

    @classmethod
    def mixed(cls, base: ModelSpec, mixing: Mixing) -> ModelSpec:
        return cls(Family.MIXED, base=base, mixing=mixing)

    # queries ----------------------------------------------------------------

    def a_at(self, t: int) -> float:
        return schedule_value(self.a, t)

    def b_at(self, t: int) -> float:
        return schedule_value(self.b, t)

    @property
    def is_time_homogeneous(self) -> bool:
        m = self.base if self.family is Family.MIXED else self
        return _is_constant(m.a) and _is_constant(m.b)

    def coefficient_sups(self, horizon: int | None = None) -> tuple[float, float]:
        """``(sup a_t, sup b_t)``, absolute values for the log-linear family."""
        m = self.base if self.family is Family.MIXED else self
        absolute = m.family is Family.LOGLINEAR
        return schedule_sup(m.a, horizon, absolute), schedule_sup(m.b, horizon, absolute)

    def contraction_margin(self, horizon: int | None = None) -> float:
        """``sup_t (a_t + b_t)`` (or ``|a| + |b|`` for log-linear).

        For mixed models the base margin is scaled by ``E z2``. Bounds are
        certified only when this is < 1.
        """
        if self.family is Family.MIXED:
            return self.mixing.mean * self.base.contraction_margin(horizon)
        if self.family is Family.LOGLINEAR:
            return abs(self.a_at(0)) + abs(self.b_at(0)) if self.is_time_homogeneous else sum(
                self.coefficient_sups(horizon))
        if self.is_time_homogeneous:
            return self.a_at(0) + self.b_at(0)
        # sup of the sum, not the sum of sups
        if callable(self.a) or callable(self.b):
            if horizon is None:
                raise ParameterError("a horizon is required for callable schedules")
            ts = range(horizon + 1)
        else:
            lens = [len(s) for s in (self.a, self.b) if isinstance(s, tuple)]
            ts = range(min(lens) if horizon is None else min(min(lens), horizon + 1))
        warnings.warn(
            "supremum of a time-varying schedule evaluated over the simulated horizon only",
            HorizonLimitedWarning,
            stacklevel=2,
        )
        return max(self.a_at(t) + self.b_at(t) for t in ts)

    def exp_moment_flag(self) -> str | None:
        """Flag log-linear covariates whose ``E exp(2z)`` cannot be confirmed finite."""
        if self.family is not Family.LOGLINEAR:
            return None
        ok = self.covariate.exp2_moment_finite()
        if ok is True and self.covariate.kind in ("zero", "constant"):
            return None
        if ok is False:
            return f"covariate {self.covariate.kind} has E exp(2z) = inf; no mixing rate certified"
        return f"covariate {self.covariate.kind} is not i.i.d. with verified E exp(2z) < inf"

    def describe(self) -> str:
        if self.family is Family.MIXED:
            m = self.mixing
            mix = f"bernoulli(p={m.p})" if m.kind == "bernoulli" else f"gamma({m.shape},{m.rate})"
            return f"mixed[{mix}]({self.base.describe()})"
        parts = [f"a={_fmt_schedule(self.a)}", f"b={_fmt_schedule(self.b)}"]
        if self.family is Family.SOFTPLUS:
            parts.append(f"c={self.c}")
        if self.family is Family.LOGLINEAR:
            parts.insert(0, f"d={self.d}")
        parts.append(f"z={self.covariate.kind}")
        return f"{self.family.value}(" + ", ".join(parts) + ")"


def _fmt_schedule(s: Schedule) -> str:
    if _is_constant(s):
        return repr(float(s))
    return "callable" if callable(s) else f"seq[{len(s)}]"


# ---------------------------------------------------------------------------
# one-step recursion


def softplus(x: float, c: float = 1.0) -> float:
    """``c * ln(1 + exp(x / c))`` evaluated without overflow."""
    if not c > 0:
        raise ParameterError("softplus scale c must be > 0")
    return max(x, 0.0) + c * math.log1p(math.exp(-abs(x) / c))


def intensity_step(model: ModelSpec, t: int, y: int, lam: float, z) -> float:
    """Next intensity ``f_t(y, lam, z)``.

    For mixed models ``z`` is the pair ``(z1, z2)``.
    """
    fam = model.family
    if fam is Family.MIXED:
        z1, z2 = z
        if not math.isfinite(z2) or z2 < 0:
            raise InvalidStateError("invalid state: mixing variable must be finite and >= 0")
        return z2 * intensity_step(model.base, t, y, lam, z1)
    if not (math.isfinite(lam) and math.isfinite(z) and math.isfinite(y)):
        raise InvalidStateError("invalid state: non-finite input")
    if lam < 0 or y < 0:
        raise InvalidStateError("invalid state: negative intensity or count")
    a = model.a_at(t)
    b = model.b_at(t)
    if fam is Family.LINEAR:
        out = a * y + b * lam + z
        assert out >= 0, "linear intensity went negative"
        return out
    if fam is Family.SOFTPLUS:
        return softplus(a * y + b * lam + z, model.c)
    if lam <= 0:
        raise InvalidStateError("invalid state: log-linear recursion needs lam > 0")
    return math.exp(model.d + a * math.log(lam) + b * math.log(y + 1.0) + z)


def draw_covariate(model: ModelSpec, t: int, rng: np.random.Generator):
    """Draw ``z_t`` (a pair for mixed models)."""
    z1 = model.covariate.draw(t, rng)
    if model.family is Family.MIXED:
        return (z1, float(model.mixing.draw(rng)))
    return z1


# ---------------------------------------------------------------------------
# pmfs


def poisson_window(*lams: float, tail: float = PMF_TAIL) -> tuple[int, int]:
    """Integer range ``[lo, hi]`` holding all but ``tail`` of each Poisson law.

    Uses the Bernstein bound ``P(|Y - lam| >= x) <= 2 exp(-x^2 / (2(lam + x/3)))``.
    """
    lo, hi = None, 0
    r = math.log(2.0 / tail)
    for lam in lams:
        if lam == 0:
            lo = 0
            continue
        # solve x^2 = 2 r (lam + x/3) for x
        x = (2 * r / 3 + math.sqrt((2 * r / 3) ** 2 + 8 * r * lam)) / 2
        l_ = max(0, math.floor(lam - x))
        h_ = math.ceil(lam + x)
        lo = l_ if lo is None else min(lo, l_)
        hi = max(hi, h_)
    return (lo or 0), hi


def sample_mixed_poisson(mixing: Mixing, nu: float, size: int, rng: np.random.Generator) -> np.ndarray:
    """Draws of ``Pois(z2 * nu)`` with ``z2`` from ``mixing``."""
    g = np.asarray(mixing.draw(rng, size), dtype=float)
    return rng.poisson(g * nu)


_LGAMMA_CACHE = gammaln(np.arange(4096) + 1.0)


def _log_factorial(k: np.ndarray) -> np.ndarray:
    if k[-1] < len(_LGAMMA_CACHE):
        return _LGAMMA_CACHE[k]
    return gammaln(k + 1.0)


def poisson_pmf_range(lam: float, lo: int, hi: int) -> np.ndarray:
    """Poisson pmf on ``lo..hi`` (``Pois(0)`` is the point mass at 0)."""
    k = np.arange(lo, hi + 1)
    if lam == 0:
        out = np.zeros(len(k))
        if lo == 0:
            out[0] = 1.0
        return out
    return np.exp(k * math.log(lam) - lam - _log_factorial(k))


def poisson_pmf(lam: float, k) -> np.ndarray | float:
    k_arr = np.asarray(k)
    if lam == 0:
        out = (k_arr == 0).astype(float)
    else:
        out = np.exp(k_arr * math.log(lam) - lam - gammaln(k_arr + 1.0))
    return float(out) if out.ndim == 0 else out


def zip_pmf(p: float, nu: float, k) -> np.ndarray | float:
    """Zero-inflated Poisson pmf: extra zero mass ``1 - p`` on top of ``p * Pois(nu)``."""
    if not 0 < p <= 1:
        raise ParameterError("ZIP weight p must lie in (0, 1]")
    if nu < 0:
        raise ParameterError("ZIP intensity must be >= 0")
    k_arr = np.asarray(k)
    out = p * np.asarray(poisson_pmf(nu, k_arr)) + (1 - p) * (k_arr == 0)
    return float(out) if out.ndim == 0 else out


def nb_pmf(shape: float, rate: float, lam: float, k) -> np.ndarray | float:
    """Pmf of ``Pois(G * lam)`` with ``G ~ Gamma(shape, rate)``.

    This is NB(shape, rate / (lam + rate)).
    """
    if not (shape > 0 and rate > 0):
        raise ParameterError("NB shape and rate must be > 0")
    if lam < 0:
        raise ParameterError("NB intensity must be >= 0")
    k_arr = np.asarray(k, dtype=float)
    if lam == 0:
        out = (k_arr == 0).astype(float)
    else:
        # log q and log(1 - q) for q = rate / (lam + rate), without rounding q to 1
        log_q = -math.log1p(lam / rate)
        log_1mq = math.log(lam) - math.log(lam + rate)
        out = np.exp(
            gammaln(shape + k_arr) - gammaln(shape) - gammaln(k_arr + 1.0)
            + shape * log_q + k_arr * log_1mq
        )
    return float(out) if out.ndim == 0 else out


# ---------------------------------------------------------------------------
# paths


@dataclass(frozen=True, eq=False)
class Path:
    """One trajectory on ``t = 0..n``.

    ``z`` has shape ``(n+1,)``, or ``(n+1, 2)`` holding ``(z1, z2)`` for
    mixed models. ``lam[t+1] == intensity_step(model, t, y[t], lam[t], z[t])``
    holds exactly.
    """

    y: np.ndarray
    lam: np.ndarray
    z: np.ndarray
    seed: int | None = None
    model: ModelSpec | None = None

    def __post_init__(self):
        if not len(self.y) == len(self.lam) == len(self.z):
            raise ParameterError("path arrays must have equal length")
        for arr in (self.y, self.lam, self.z):
            arr.setflags(write=False)

    def __len__(self) -> int:
        return len(self.y)

    def z_at(self, t: int):
        zt = self.z[t]
        return (float(zt[0]), float(zt[1])) if self.z.ndim == 2 else float(zt)

    def identical(self, other: Path) -> bool:
        return (
            np.array_equal(self.y, other.y)
            and np.array_equal(self.lam, other.lam)
            and np.array_equal(self.z, other.z)
        )

    def to_csv(self, target=None) -> str:
        """Write ``t,y,lambda,z`` rows (plus ``z2`` for mixed models)."""
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        mixed = self.z.ndim == 2
        w.writerow(["t", "y", "lambda", "z"] + (["z2"] if mixed else []))
        for t in range(len(self)):
            row = [t, int(self.y[t]), fmt_float(self.lam[t])]
            if mixed:
                row += [fmt_float(self.z[t, 0]), fmt_float(self.z[t, 1])]
            else:
                row.append(fmt_float(self.z[t]))
            w.writerow(row)
        text = buf.getvalue()
        if target is not None:
            FsPath(target).write_text(text)
        return text

    @classmethod
    def from_csv(cls, source, model: ModelSpec | None = None, seed: int | None = None) -> Path:
        text = FsPath(source).read_text() if not isinstance(source, io.StringIO) else source.getvalue()
        rows = list(csv.DictReader(io.StringIO(text)))
        y = np.array([int(r["y"]) for r in rows], dtype=np.int64)
        lam = np.array([float(r["lambda"]) for r in rows])
        if rows and "z2" in rows[0]:
            z = np.array([[float(r["z"]), float(r["z2"])] for r in rows])
        else:
            z = np.array([float(r["z"]) for r in rows])
        return cls(y, lam, z, seed, model)


def fmt_float(x: float) -> str:
    """Shortest decimal string that round-trips to the same double."""
    return repr(float(x))


def simulate_path(model: ModelSpec, n: int, lam0: float, seed, *,
                  cap: float = DEFAULT_CAP) -> Path:
    """Simulate ``t = 0..n`` from ``lam[0] = lam0``.

    ``seed`` is a 64-bit int or a tuple of ints (a composite stream key).

    Per step the draws are, in order: ``y[t] ~ Pois(lam[t])``, then ``z[t]``
    (then ``z2[t]`` for mixed models). The whole path is a function of
    ``(model, n, lam0, seed)``.

    Raises:
        ExplosionError: if an intensity exceeds ``cap``.
    """
    if n < 1:
        raise ParameterError("path length n must be >= 1")
    if not (math.isfinite(lam0) and lam0 >= 0):
        raise ParameterError("lam0 must be finite and >= 0")
    key = tuple(int(s) for s in seed) if isinstance(seed, (tuple, list)) else (int(seed),)
    return _simulate(model, n, lam0, stream(*key), cap, seed)


def _simulate(model: ModelSpec, n: int, lam0: float, rng: np.random.Generator,
              cap: float, seed: int | None) -> Path:
    mixed = model.family is Family.MIXED
    y = np.zeros(n + 1, dtype=np.int64)
    lam = np.zeros(n + 1)
    z = np.zeros((n + 1, 2)) if mixed else np.zeros(n + 1)
    lam[0] = lam0
    lt = lam0
    poisson = rng.poisson
    for t in range(n + 1):
        if lt > cap:
            raise ExplosionError(f"explosion guard tripped at t={t} (lambda={lt:.3g} > {cap:.3g})")
        yt = int(poisson(lt))
        zt = draw_covariate(model, t, rng)
        y[t] = yt
        z[t] = zt
        if t < n:
            lt = intensity_step(model, t, yt, lt, zt)
            lam[t + 1] = lt
    return Path(y, lam, z, seed, model)


# ---------------------------------------------------------------------------
# config files


def model_to_config(model: ModelSpec) -> str:
    """Serialise to INI text: sections ``model``, ``covariate`` and, for mixed models, ``mixing``/``base``."""
    cp = configparser.ConfigParser()
    _write_model_sections(cp, model)
    buf = io.StringIO()
    cp.write(buf)
    return buf.getvalue()


def _schedule_to_str(s: Schedule) -> str:
    if callable(s):
        raise ParameterError("callable schedules cannot be serialised")
    if _is_constant(s):
        return fmt_float(s)
    return ", ".join(fmt_float(v) for v in s)


def _write_model_sections(cp: configparser.ConfigParser, model: ModelSpec, prefix: str = "") -> None:
    sec = prefix + "model"
    cp[sec] = {"family": model.family.value}
    if model.family is Family.MIXED:
        m = model.mixing
        cp[prefix + "mixing"] = (
            {"kind": "bernoulli", "p": fmt_float(m.p)} if m.kind == "bernoulli"
            else {"kind": "gamma", "shape": fmt_float(m.shape), "rate": fmt_float(m.rate)}
        )
        _write_model_sections(cp, model.base, prefix="base.")
        return
    cp[sec]["a"] = _schedule_to_str(model.a)
    cp[sec]["b"] = _schedule_to_str(model.b)
    if model.family is Family.SOFTPLUS:
        cp[sec]["c"] = fmt_float(model.c)
    if model.family is Family.LOGLINEAR:
        cp[sec]["d"] = fmt_float(model.d)
    cv = model.covariate
    out = {"kind": cv.kind}
    if cv.kind == "constant":
        out["value"] = fmt_float(cv.value)
    elif cv.kind == "iid_exponential":
        out["mean"] = fmt_float(cv.mean_)
    elif cv.kind == "iid_lognormal":
        out.update(mu=fmt_float(cv.mu), sigma=fmt_float(cv.sigma))
    elif cv.kind == "linear_trend":
        out.update(b0=fmt_float(cv.b0), b1=fmt_float(cv.b1))
    elif cv.kind == "sequence":
        out["values"] = ", ".join(fmt_float(v) for v in cv.values)
    cp[prefix + "covariate"] = out


def _parse_schedule(text: str) -> Schedule:
    parts = [p.strip() for p in text.split(",") if p.strip()]
    if len(parts) == 1:
        return float(parts[0])
    return tuple(float(p) for p in parts)


def model_from_config(text: str) -> ModelSpec:
    """Parse the INI layout written by :func:`model_to_config`; ``;`` and ``#`` start comments."""
    cp = configparser.ConfigParser(inline_comment_prefixes=(";", "#"))
    try:
        cp.read_string(text)
        return _read_model_sections(cp)
    except (KeyError, configparser.Error) as exc:
        raise ParameterError(f"incomplete model config: {exc}") from None
    except ParameterError:
        raise
    except ValueError as exc:
        raise ParameterError(f"bad value in model config: {exc}") from None


def _read_model_sections(cp: configparser.ConfigParser, prefix: str = "") -> ModelSpec:
    sec = cp[prefix + "model"]
    family = Family(sec["family"].strip().lower())
    if family is Family.MIXED:
        mx = cp[prefix + "mixing"]
        kind = mx["kind"].strip().lower()
        if kind == "bernoulli":
            mixing = Mixing.bernoulli(float(mx["p"]))
        elif kind == "gamma":
            mixing = Mixing.gamma(float(mx["shape"]), float(mx["rate"]))
        else:
            raise ParameterError(f"unknown mixing kind {kind!r}")
        return ModelSpec.mixed(_read_model_sections(cp, "base."), mixing)
    cv_sec = cp[prefix + "covariate"] if cp.has_section(prefix + "covariate") else {"kind": "zero"}
    kind = cv_sec["kind"].strip().lower()
    if kind == "zero":
        cov = CovariateSpec.zero()
    elif kind == "constant":
        cov = CovariateSpec.constant(float(cv_sec["value"]))
    elif kind == "iid_exponential":
        cov = CovariateSpec.exponential(float(cv_sec["mean"]))
    elif kind == "iid_lognormal":
        cov = CovariateSpec.lognormal(float(cv_sec["mu"]), float(cv_sec["sigma"]))
    elif kind == "linear_trend":
        cov = CovariateSpec.linear_trend(float(cv_sec["b0"]), float(cv_sec["b1"]))
    elif kind == "sequence":
        cov = CovariateSpec.sequence([float(v) for v in cv_sec["values"].split(",")])
    else:
        raise ParameterError(f"unknown covariate kind {kind!r}")
    return ModelSpec(
        family,
        a=_parse_schedule(sec.get("a", "0")),
        b=_parse_schedule(sec.get("b", "0")),
        c=float(sec.get("c", "1")),
        d=float(sec.get("d", "0")),
        covariate=cov,
    )


def load_model(path) -> ModelSpec:
    return model_from_config(FsPath(path).read_text())


def save_model(model: ModelSpec, path) -> None:
    FsPath(path).write_text(model_to_config(model))
