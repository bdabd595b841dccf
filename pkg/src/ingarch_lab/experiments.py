"""Monte Carlo studies: size/power of the trend test, coupling checks, bound checks.

Every replication draws from its own counter-based stream keyed by
``(master_seed, cell_index, rep_index)`` (or a similar tuple), so reports
are identical for any number of worker threads.
"""

from __future__ import annotations

import configparser
import csv
import io
import json
import math
import time
from collections.abc import Mapping, Sequence
from dataclasses import dataclass, field

import numpy as np
from scipy import stats

from .bounds import BetaEstimate, estimate_beta_upper, model_constants, theorem21_bound
from .coupling import additive_coupling_poisson, maximal_coupling_poisson, tv_poisson
from .exceptions import NoContractionError, ParameterError
from .models import CovariateSpec, Family, ModelSpec, fmt_float, poisson_pmf_range, poisson_window, simulate_path
from .rng import chunked, parallel_map, stream
from .trend import trend_test

SCHEMA_VERSION = 1
LAM0_RULE = "lam0 = b0 / (1 - a) (stationary mean of the trend-free chain)"


# ---------------------------------------------------------------------------
# size / power study


def trend_model(a: float, b0: float, b1: float) -> ModelSpec:
    """INARCH(1) with ``lam[t] = a*y[t-1] + b0 + b1*t``.

    The recursion sets ``lam[t+1]`` from ``z[t]``, so the covariate is
    ``z[t] = (b0 + b1) + b1*t``.
    """
    return ModelSpec.linear(a, 0.0, CovariateSpec.linear_trend(b0 + b1, b1))


def simulate_trend_series(a: float, b0: float, b1: float, n: int, key) -> np.ndarray:
    """Counts ``y_0..y_n`` of the trend model started at ``lam0 = b0 / (1 - a)``."""
    return simulate_path(trend_model(a, b0, b1), n, b0 / (1.0 - a), key).y


@dataclass(frozen=True)
class McDesign:
    """Grid of the size/power study.

    ``n_values`` is either one list shared by all ``a`` or a mapping
    ``a -> list of n``.
    """

    a_values: tuple[float, ...]
    n_values: tuple[int, ...] | Mapping[float, tuple[int, ...]]
    b0: float = 1.0
    b1_values: tuple[float, ...] = tuple(float(v) for v in np.linspace(0.0, 0.1, 11))
    alpha: float = 0.1
    reps: int = 5000
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "a_values", tuple(float(a) for a in self.a_values))
        object.__setattr__(self, "b1_values", tuple(float(b) for b in self.b1_values))
        if isinstance(self.n_values, Mapping):
            nv = {float(a): tuple(int(n) for n in ns) for a, ns in self.n_values.items()}
            missing = [a for a in self.a_values if a not in nv]
            if missing:
                raise ParameterError(f"no n values given for a in {missing}")
            if any(not ns for ns in nv.values()):
                raise ParameterError("every a needs at least one n")
        else:
            nv = tuple(int(n) for n in self.n_values)
            if not nv:
                raise ParameterError("n grid is empty")
        object.__setattr__(self, "n_values", nv)
        if not self.a_values or not self.b1_values:
            raise ParameterError("a and b1 grids must be non-empty")
        if any(not 0 <= a < 1 for a in self.a_values):
            raise ParameterError("a values must lie in [0, 1)")
        if self.b0 <= 0 or any(b < 0 for b in self.b1_values):
            raise ParameterError("need b0 > 0 and b1 >= 0")
        if self.reps < 1:
            raise ParameterError("reps must be >= 1")
        if not 0 < self.alpha <= 0.5:
            raise ParameterError("alpha must lie in (0, 0.5]")

    def n_for(self, a: float) -> tuple[int, ...]:
        return self.n_values[a] if isinstance(self.n_values, dict) else self.n_values

    def cells(self) -> list[tuple[float, int, float]]:
        """All ``(a, n, b1)`` combinations, in a fixed order."""
        return [(a, n, b1) for a in self.a_values for n in self.n_for(a) for b1 in self.b1_values]

    @classmethod
    def default_study(cls, reps: int = 5000, seed: int = 0, b1_values: Sequence[float] | None = None) -> McDesign:
        """``a = 0.2`` with ``n = 50, 100, 200`` and ``a = 0.5`` with ``n = 100, 250, 500``."""
        kw = {} if b1_values is None else {"b1_values": tuple(b1_values)}
        return cls((0.2, 0.5), {0.2: (50, 100, 200), 0.5: (100, 250, 500)}, reps=reps, seed=seed, **kw)

    # config round trip -------------------------------------------------

    def to_config(self) -> str:
        cp = configparser.ConfigParser()
        cp["design"] = {
            "a": ", ".join(repr(a) for a in self.a_values),
            "b0": repr(self.b0),
            "b1": ", ".join(repr(b) for b in self.b1_values),
            "alpha": repr(self.alpha),
            "reps": str(self.reps),
            "seed": str(self.seed),
        }
        if isinstance(self.n_values, dict):
            cp["design"]["n"] = "; ".join(
                f"{a!r}: " + ", ".join(str(n) for n in ns) for a, ns in self.n_values.items())
        else:
            cp["design"]["n"] = ", ".join(str(n) for n in self.n_values)
        buf = io.StringIO()
        cp.write(buf)
        return buf.getvalue()

    @classmethod
    def from_config(cls, text: str) -> McDesign:
        """Parse a ``[design]`` INI section (see :meth:`to_config`).

        ``n`` is either ``50, 100`` or per-a, ``0.2: 50, 100; 0.5: 100, 250``.
        """
        cp = configparser.ConfigParser(inline_comment_prefixes=("#",))
        try:
            cp.read_string(text)
            sec = cp["design"]
        except (configparser.Error, KeyError) as exc:
            raise ParameterError(f"bad design config: {exc}") from None

        def floats(s):
            return tuple(float(v) for v in s.split(",") if v.strip())

        try:
            a_values = floats(sec["a"])
            n_text = sec["n"]
            if ":" in n_text:
                n_values = {}
                for part in n_text.split(";"):
                    if part.strip():
                        a, ns = part.split(":")
                        n_values[float(a)] = tuple(int(v) for v in ns.split(",") if v.strip())
            else:
                n_values = tuple(int(v) for v in n_text.split(",") if v.strip())
            kw = {}
            if "b1" in sec:
                kw["b1_values"] = floats(sec["b1"])
            for key, conv in (("b0", float), ("alpha", float), ("reps", int), ("seed", int)):
                if key in sec:
                    kw[key] = conv(sec[key])
        except KeyError as exc:
            raise ParameterError(f"design config lacks key {exc}") from None
        except ValueError as exc:
            raise ParameterError(f"bad value in design config: {exc}") from None
        return cls(a_values, n_values, **kw)


@dataclass(frozen=True)
class McCell:
    a: float
    n: int
    b1: float
    rate: float
    se: float
    reps: int
    invalid: int

    def __post_init__(self):
        if not (math.isnan(self.rate) or 0.0 <= self.rate <= 1.0):
            raise ValueError(f"rate {self.rate} outside [0, 1]")


@dataclass(frozen=True)
class McReport:
    """Rejection rates per cell. ``reps`` counts valid replications only."""

    cells: tuple[McCell, ...]
    seed: int
    alpha: float
    lam0_rule: str = LAM0_RULE
    wall_time: float = field(default=0.0, compare=False)

    CSV_HEADER = ("a", "n", "b1", "rate", "se", "reps")

    def cell(self, a: float, n: int, b1: float) -> McCell:
        for c in self.cells:
            if (c.a, c.n) == (a, n) and math.isclose(c.b1, b1, abs_tol=1e-12):
                return c
        raise KeyError((a, n, b1))

    def to_csv(self) -> str:
        lines = [",".join(self.CSV_HEADER)]
        for c in self.cells:
            lines.append(",".join([fmt_float(c.a), str(c.n), fmt_float(c.b1), fmt_float(c.rate),
                                   fmt_float(c.se), str(c.reps)]))
        return "\n".join(lines) + "\n"

    def to_json(self) -> str:
        """JSON with metadata; wall time is left out so files are reproducible."""
        doc = {
            "schema_version": SCHEMA_VERSION,
            "kind": "power-study",
            "seed": self.seed,
            "alpha": self.alpha,
            "lam0_rule": self.lam0_rule,
            "cells": [
                {"a": c.a, "n": c.n, "b1": c.b1, "rate": c.rate, "se": c.se, "reps": c.reps,
                 "invalid": c.invalid}
                for c in self.cells
            ],
        }
        return json.dumps(doc, indent=2) + "\n"

    @classmethod
    def from_json(cls, text: str) -> McReport:
        doc = json.loads(text)
        cells = tuple(McCell(**c) for c in doc["cells"])
        return cls(cells, doc["seed"], doc["alpha"], doc["lam0_rule"])

    @classmethod
    def from_csv(cls, text: str, seed: int = 0, alpha: float = math.nan) -> McReport:
        """Rebuild from CSV; the invalid tally is not part of the CSV and reads as 0."""
        rows = list(csv.DictReader(io.StringIO(text)))
        cells = tuple(McCell(float(r["a"]), int(r["n"]), float(r["b1"]), float(r["rate"]),
                             float(r["se"]), int(r["reps"]), 0) for r in rows)
        return cls(cells, seed, alpha)


_CHUNK = 250


def run_power_study(design: McDesign, workers: int = 1) -> McReport:
    """Rejection frequency of :func:`trend_test` in every design cell.

    Replications with an undefined variance plug-in are counted separately
    and excluded from the rate.
    """
    start = time.perf_counter()
    cells = design.cells()
    tasks = [(ci, rng_range) for ci in range(len(cells)) for rng_range in chunked(design.reps, _CHUNK)]

    def work(task):
        ci, reps = task
        a, n, b1 = cells[ci]
        rej = inv = 0
        for r in reps:
            y = simulate_trend_series(a, design.b0, b1, n, (design.seed, ci, r))
            res = trend_test(y, design.alpha)
            if res.reject is None:
                inv += 1
            else:
                rej += res.reject
        return ci, rej, inv

    tally = np.zeros((len(cells), 2), dtype=np.int64)
    for ci, rej, inv in parallel_map(work, tasks, workers):
        tally[ci] += (rej, inv)
    out = []
    for (a, n, b1), (rej, inv) in zip(cells, tally):
        valid = design.reps - int(inv)
        rate = rej / valid if valid else math.nan
        se = math.sqrt(rate * (1 - rate) / valid) if valid else math.nan
        out.append(McCell(a, n, b1, float(rate), se, valid, int(inv)))
    return McReport(tuple(out), design.seed, design.alpha, wall_time=time.perf_counter() - start)


# ---------------------------------------------------------------------------
# coupling validation


DEFAULT_COUPLING_GRID = ((1.0, 2.0), (5.0, 5.5), (0.1, 3.0), (0.0, 1.0), (2.0, 2.0))


def poisson_gof(sample: np.ndarray, lam: float, min_expected: float = 5.0) -> float:
    """Chi-squared goodness-of-fit p-value of ``sample`` against ``Pois(lam)``.

    Adjacent cells are pooled until each expects at least ``min_expected``
    counts; the last cell absorbs the upper tail.
    """
    sample = np.asarray(sample)
    N = len(sample)
    if lam == 0:
        return 1.0 if np.all(sample == 0) else 0.0
    _, hi = poisson_window(lam, tail=1e-14)
    hi = max(hi, int(sample.max()))
    probs = poisson_pmf_range(lam, 0, hi)
    obs = np.bincount(sample, minlength=hi + 1)[: hi + 1].astype(float)
    exp = probs * N
    exp[-1] += N - exp.sum()  # upper tail mass
    pooled_o, pooled_e = [], []
    acc_o = acc_e = 0.0
    for o, e in zip(obs, exp):
        acc_o += o
        acc_e += e
        if acc_e >= min_expected:
            pooled_o.append(acc_o)
            pooled_e.append(acc_e)
            acc_o = acc_e = 0.0
    if acc_e > 0 or acc_o > 0:
        if pooled_o:
            pooled_o[-1] += acc_o
            pooled_e[-1] += acc_e
        else:
            pooled_o.append(acc_o)
            pooled_e.append(acc_e)
    if len(pooled_o) < 2:
        return 1.0
    e = np.array(pooled_e)
    e *= N / e.sum()
    return float(stats.chisquare(pooled_o, e).pvalue)


@dataclass(frozen=True)
class CouplingCell:
    lam: float
    lam2: float
    tv: float
    p_unequal: float
    se_unequal: float
    gof_max: tuple[float, float]
    gof_add: tuple[float, float]
    p_unequal_add: float
    mean_abs_diff_add: float
    se_abs_diff_add: float
    reps: int
    gof_threshold: float = 1e-4

    @property
    def tv_ok(self) -> bool:
        if self.lam == self.lam2:
            return self.p_unequal == 0.0
        return abs(self.p_unequal - self.tv) <= 3 * max(self.se_unequal, 1 / self.reps)

    @property
    def marginals_ok(self) -> bool:
        return min(*self.gof_max, *self.gof_add) > self.gof_threshold

    @property
    def additive_ok(self) -> bool:
        target = abs(self.lam - self.lam2)
        return abs(self.mean_abs_diff_add - target) <= 3 * max(self.se_abs_diff_add, 1 / self.reps)

    @property
    def dominance_ok(self) -> bool:
        """Additive coupling never beats the maximal one (3 s.e. slack)."""
        se = math.sqrt(self.p_unequal_add * (1 - self.p_unequal_add) / self.reps) + self.se_unequal
        return self.p_unequal_add >= self.p_unequal - 3 * se

    @property
    def passed(self) -> bool:
        return self.tv_ok and self.marginals_ok and self.additive_ok and self.dominance_ok


@dataclass(frozen=True)
class CouplingReport:
    cells: tuple[CouplingCell, ...]
    seed: int
    reps: int

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.cells)

    CSV_HEADER = ("lam", "lam2", "tv", "p_unequal", "se", "gof_max_a", "gof_max_b",
                  "gof_add_a", "gof_add_b", "p_unequal_add", "mean_abs_diff_add", "se_abs_diff_add",
                  "pass")

    def to_csv(self) -> str:
        lines = [",".join(self.CSV_HEADER)]
        for c in self.cells:
            vals = [c.lam, c.lam2, c.tv, c.p_unequal, c.se_unequal, *c.gof_max, *c.gof_add,
                    c.p_unequal_add, c.mean_abs_diff_add, c.se_abs_diff_add]
            lines.append(",".join(fmt_float(v) for v in vals) + f",{int(c.passed)}")
        return "\n".join(lines) + "\n"

    def to_json(self) -> str:
        doc = {"schema_version": SCHEMA_VERSION, "kind": "validate-couplings", "seed": self.seed,
               "reps": self.reps, "passed": self.passed,
               "cells": [dict(zip(self.CSV_HEADER[:-1],
                                  [c.lam, c.lam2, c.tv, c.p_unequal, c.se_unequal, *c.gof_max,
                                   *c.gof_add, c.p_unequal_add, c.mean_abs_diff_add,
                                   c.se_abs_diff_add]), passed=c.passed)
                         for c in self.cells]}
        return json.dumps(doc, indent=2) + "\n"


def _validate_cell(ci: int, lam: float, lam2: float, reps: int, seed: int) -> CouplingCell:
    y, y2 = maximal_coupling_poisson(lam, lam2, stream(seed, ci, 0), size=reps)
    u, u2 = additive_coupling_poisson(lam, lam2, stream(seed, ci, 1), size=reps)
    p_ne = float(np.mean(y != y2))
    diff = np.abs(u - u2).astype(float)
    return CouplingCell(
        lam, lam2, tv_poisson(lam, lam2), p_ne, math.sqrt(p_ne * (1 - p_ne) / reps),
        (poisson_gof(y, lam), poisson_gof(y2, lam2)),
        (poisson_gof(u, lam), poisson_gof(u2, lam2)),
        float(np.mean(u != u2)), float(diff.mean()), float(diff.std(ddof=1) / math.sqrt(reps)),
        reps,
    )


def run_coupling_validation(grid: Sequence[tuple[float, float]] = DEFAULT_COUPLING_GRID,
                            reps: int = 100_000, seed: int = 0, workers: int = 1) -> CouplingReport:
    """Batch check of both couplings: marginals, ``P(Y != Y') = TV``, ``E|Y - Y'|``."""
    if reps < 2:
        raise ParameterError("reps must be >= 2")
    cells = parallel_map(lambda item: _validate_cell(item[0], *item[1], reps, seed),
                         list(enumerate(grid)), workers)
    return CouplingReport(tuple(cells), seed, reps)


# ---------------------------------------------------------------------------
# bound verification


@dataclass(frozen=True)
class BoundCheckRow:
    label: str
    n: int
    estimate: float
    se: float
    bound: float
    passed: bool


@dataclass(frozen=True)
class BoundVerificationReport:
    rows: tuple[BoundCheckRow, ...]
    notes: tuple[str, ...]
    slopes: Mapping[str, tuple[float, float]] = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(r.passed for r in self.rows) and all(s <= lim for s, lim in self.slopes.values())

    def to_csv(self) -> str:
        lines = ["model,n,estimate,se,bound,pass"]
        for r in self.rows:
            lines.append(f"{r.label},{r.n},{fmt_float(r.estimate)},{fmt_float(r.se)},"
                         f"{fmt_float(r.bound)},{int(r.passed)}")
        return "\n".join(lines) + "\n"


def decay_slope(ns: Sequence[int], estimates: Sequence[float]) -> float:
    """Least-squares slope of ``log(estimate)`` on ``n`` over the positive estimates."""
    pts = [(n, math.log(e)) for n, e in zip(ns, estimates) if e > 0]
    if len(pts) < 2:
        return -math.inf
    x, y = np.array(pts).T
    return float(np.polyfit(x, y, 1)[0])


def run_bound_verification(models: Sequence[tuple[str, ModelSpec, float]], k: int,
                           n_range: Sequence[int], reps: int, seed: int = 0,
                           workers: int = 1) -> BoundVerificationReport:
    """Empirical ``beta`` upper estimates against the closed-form bounds.

    ``models`` holds ``(label, model, lam0)``. Linear and softplus models
    are compared with the contraction bound (pass when
    ``estimate <= bound + 3 s.e.``). For log-linear models only the decay
    rate is known: the fitted slope of ``log(estimate)`` must not exceed
    ``log(|a| + |b|) + 0.1``. Models without a certificate are skipped and
    listed in ``notes``.
    """
    rows: list[BoundCheckRow] = []
    notes: list[str] = []
    slopes: dict[str, tuple[float, float]] = {}
    for mi, (label, model, lam0) in enumerate(models):
        fam = model.family
        if fam in (Family.LINEAR, Family.SOFTPLUS):
            try:
                consts, _ = model_constants(model, lam0, horizon=k + max(n_range))
            except NoContractionError as exc:
                notes.append(f"{label}: skipped ({exc})")
                continue
            for n in n_range:
                est = estimate_beta_upper(model, k, n, reps, seed=_mix(seed, mi), lam0=lam0,
                                          workers=workers)
                bound = theorem21_bound(consts, n)
                rows.append(BoundCheckRow(label, n, est.estimate, est.se, bound,
                                          est.estimate <= bound + 3 * est.se))
        elif fam is Family.LOGLINEAR:
            r = model.contraction_margin() if model.is_time_homogeneous else math.inf
            if not r < 1:
                notes.append(f"{label}: skipped (no log-linear rate, |a| + |b| >= 1)")
                continue
            ests: list[BetaEstimate] = []
            for n in n_range:
                est = estimate_beta_upper(model, k, n, reps, seed=_mix(seed, mi), lam0=lam0,
                                          workers=workers)
                ests.append(est)
                rows.append(BoundCheckRow(label, n, est.estimate, est.se, r**n, True))
            slope = decay_slope(n_range, [e.estimate for e in ests])
            slopes[label] = (slope, math.log(r) + 0.1 if r > 0 else -math.inf)
            notes.append(f"{label}: rate only, fitted log-slope {slope:.4g} "
                         f"vs log(|a|+|b|) + 0.1 = {slopes[label][1]:.4g}")
        else:
            notes.append(f"{label}: skipped (no closed-form constants for the {fam.value} family)")
    return BoundVerificationReport(tuple(rows), tuple(notes), slopes)


def _mix(seed: int, index: int) -> int:
    """Derive a per-model master seed that stays within 64 bits."""
    return (int(seed) * 1_000_003 + index) % (1 << 63)
