"""Daily count series: CSV ingestion, serialization and synthetic fixtures."""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from datetime import date, timedelta
from importlib import resources
from pathlib import Path as FsPath

import numpy as np

from .exceptions import DataError, ParameterError
from .models import CovariateSpec, ModelSpec, simulate_path

FIXTURE_START = date(2020, 7, 15)
FIXTURE_DAYS = 63
FIXTURE_PERIOD = 7


@dataclass(frozen=True, eq=False)
class CountSeries:
    """Non-negative daily counts with optional ISO dates.

    ``filled`` marks entries that were forward-filled over a date gap.
    """

    counts: np.ndarray
    dates: tuple[date, ...] | None = None
    label: str = ""
    filled: np.ndarray = field(default=None)

    def __post_init__(self):
        counts = np.asarray(self.counts, dtype=np.int64)
        if counts.ndim != 1:
            raise DataError("counts must be one-dimensional")
        if np.any(counts < 0):
            raise DataError("counts must be non-negative")
        object.__setattr__(self, "counts", counts)
        if self.dates is not None:
            dates = tuple(self.dates)
            if len(dates) != len(counts):
                raise DataError("dates and counts differ in length")
            object.__setattr__(self, "dates", dates)
        filled = np.zeros(len(counts), dtype=bool) if self.filled is None else np.asarray(self.filled, bool)
        object.__setattr__(self, "filled", filled)
        for arr in (counts, filled):
            arr.flags.writeable = False

    def __len__(self) -> int:
        return len(self.counts)

    def __eq__(self, other) -> bool:
        if not isinstance(other, CountSeries):
            return NotImplemented
        return (
            np.array_equal(self.counts, other.counts)
            and self.dates == other.dates
            and self.label == other.label
            and np.array_equal(self.filled, other.filled)
        )


def _parse_count(text: str, row: int) -> int:
    s = text.strip()
    try:
        value = int(s)
    except ValueError:
        raise DataError(f"row {row}: count {text!r} is not an integer") from None
    if value < 0:
        raise DataError(f"row {row}: count {value} is negative")
    return value


def _parse_date(text: str, row: int) -> date:
    try:
        return date.fromisoformat(text.strip())
    except ValueError:
        raise DataError(f"row {row}: date {text!r} is not ISO-8601 (YYYY-MM-DD)") from None


def load_counts_csv(path, date_col: str = "date", count_col: str = "count",
                    allow_gaps: bool = False, label: str | None = None) -> CountSeries:
    """Read a ``date,count`` CSV into a :class:`CountSeries`.

    The date column is optional; when present the dates must be strictly
    increasing and one day apart. With ``allow_gaps`` missing days are
    forward-filled with the previous count and flagged in ``filled``.
    Row numbers in error messages count the header as row 1.

    Raises:
        DataError: on a missing column, bad count, bad date or gap.
    """
    path = FsPath(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc.strerror}") from None
    reader = csv.DictReader(io.StringIO(text))
    if reader.fieldnames is None:
        raise DataError(f"{path}: empty file, header row expected")
    if count_col not in reader.fieldnames:
        raise DataError(f"{path}: no column {count_col!r} in header {reader.fieldnames}")
    has_dates = date_col in reader.fieldnames

    counts: list[int] = []
    dates: list[date] = []
    filled: list[bool] = []
    for i, rec in enumerate(reader, start=2):
        raw = rec.get(count_col)
        if raw is None or raw.strip() == "":
            raise DataError(f"row {i}: missing count")
        c = _parse_count(raw, i)
        if has_dates:
            d = _parse_date(rec[date_col] or "", i)
            if dates:
                step = (d - dates[-1]).days
                if step <= 0:
                    raise DataError(f"row {i}: date {d} is not after {dates[-1]}")
                if step > 1:
                    if not allow_gaps:
                        raise DataError(f"row {i}: {step - 1} missing day(s) before {d} "
                                        "(use allow_gaps to forward-fill)")
                    for j in range(1, step):
                        dates.append(dates[-1] + timedelta(days=1))
                        counts.append(counts[-1])
                        filled.append(True)
            dates.append(d)
        counts.append(c)
        filled.append(False)
    if not counts:
        raise DataError(f"{path}: no data rows")
    return CountSeries(np.array(counts), tuple(dates) if has_dates else None,
                       path.stem if label is None else label, np.array(filled))


def save_counts_csv(series: CountSeries, path=None) -> str:
    """Write ``date,count`` (plus ``filled`` if any entry was filled); returns the text."""
    cols = (["date"] if series.dates is not None else []) + ["count"]
    with_filled = bool(series.filled.any())
    if with_filled:
        cols.append("filled")
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(cols)
    for i, c in enumerate(series.counts):
        row = ([series.dates[i].isoformat()] if series.dates is not None else []) + [int(c)]
        if with_filled:
            row.append(int(series.filled[i]))
        w.writerow(row)
    if path is not None:
        FsPath(path).write_text(buf.getvalue())
    return buf.getvalue()


def fixture_model(n_days: int = FIXTURE_DAYS, trend: float = 0.0, a: float = 0.2,
                  level: float = 5.0, amplitude: float = 0.3) -> ModelSpec:
    """INARCH(1) with a weekly multiplicative pattern and optional linear trend.

    ``lam[t+1] = a*y[t] + level*(1 + amplitude*sin(2*pi*t/7)) + trend*(t+1)``.
    """
    if not 0 <= amplitude < 1:
        raise ParameterError("amplitude must lie in [0, 1)")
    z = [level * (1 + amplitude * math.sin(2 * math.pi * t / FIXTURE_PERIOD)) + trend * (t + 1)
         for t in range(n_days)]
    return ModelSpec.linear(a, 0.0, CovariateSpec.sequence(z))


def make_fixture(seed: int, trend: float = 0.0, n_days: int = FIXTURE_DAYS,
                 start: date = FIXTURE_START, a: float = 0.2, level: float = 5.0,
                 amplitude: float = 0.3) -> CountSeries:
    """Synthetic daily counts from :func:`fixture_model`, started at ``level / (1 - a)``."""
    if n_days < 2:
        raise ParameterError("n_days must be >= 2")
    model = fixture_model(n_days, trend, a, level, amplitude)
    path = simulate_path(model, n_days - 1, level / (1 - a), seed)
    dates = tuple(start + timedelta(days=i) for i in range(n_days))
    label = f"synthetic seed={seed} trend={trend:g}"
    return CountSeries(path.y, dates, label)


def sample_fixture_path(name: str = "sample_counts.csv"):
    """Filesystem path of a bundled fixture (``sample_counts.csv`` or ``sample_counts_trend.csv``)."""
    return resources.files("ingarch_lab") / "data" / name
