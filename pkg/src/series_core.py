"""
Annual time-series container and the differencing / integration / autocorrelation
algebra the estimators build on.

Years are plain integers: observation i of a series belongs to year start_year + i.
All types here are immutable; every operation returns a new object.
"""

from dataclasses import dataclass
from typing import List, Sequence, Tuple

import numpy as np
import pandas as pd

from errors import ArgumentError, DegenerateSeriesError, InsufficientDataError, NoOverlapError


def _frozen_array(values) -> np.ndarray:
    arr = np.array(values, dtype=float)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class TimeSeries:
    """Annual real-valued observations starting at start_year"""

    start_year: int
    values: np.ndarray
    label: str = ""

    def __post_init__(self):
        values = _frozen_array(self.values)
        if values.ndim != 1 or values.size < 1:
            raise ArgumentError(f"series {self.label!r} must be a non-empty 1-d sequence")
        if not np.all(np.isfinite(values)):
            raise ArgumentError(f"series {self.label!r} contains missing or non-finite values")
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "start_year", int(self.start_year))

    def __len__(self) -> int:
        return int(self.values.size)

    def __repr__(self) -> str:
        return f"TimeSeries({self.label!r}, {self.start_year}-{self.end_year}, n={len(self)})"

    @property
    def end_year(self) -> int:
        return self.start_year + len(self) - 1

    @property
    def years(self) -> np.ndarray:
        return np.arange(self.start_year, self.end_year + 1)

    def equals(self, other: "TimeSeries") -> bool:
        """Exact equality of start year and values (labels ignored)"""
        return (
            self.start_year == other.start_year
            and len(self) == len(other)
            and bool(np.array_equal(self.values, other.values))
        )

    def with_values(self, values, start_year: int = None, label: str = None) -> "TimeSeries":
        return TimeSeries(
            self.start_year if start_year is None else start_year,
            values,
            self.label if label is None else label,
        )

    def slice_years(self, first: int, last: int) -> "TimeSeries":
        """Restrict to years first..last inclusive"""
        if first < self.start_year or last > self.end_year or first > last:
            raise ArgumentError(
                f"years {first}-{last} outside {self.label!r} range {self.start_year}-{self.end_year}"
            )
        lo = first - self.start_year
        return self.with_values(self.values[lo:lo + last - first + 1], start_year=first)

    def head(self, n: int) -> "TimeSeries":
        return self.slice_years(self.start_year, self.start_year + n - 1)

    def tail(self, n: int) -> "TimeSeries":
        return self.slice_years(self.end_year - n + 1, self.end_year)

    def concat(self, other: "TimeSeries") -> "TimeSeries":
        if other.start_year != self.end_year + 1:
            raise ArgumentError(
                f"cannot append series starting {other.start_year} to one ending {self.end_year}"
            )
        return self.with_values(np.concatenate([self.values, other.values]))

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame({"year": self.years, "value": self.values})


@dataclass(frozen=True, eq=False)
class Forecast:
    """Point forecasts with a symmetric-probability interval, one row per future year"""

    start_year: int
    point: np.ndarray
    lower: np.ndarray
    upper: np.ndarray
    level: float

    def __post_init__(self):
        for name in ("point", "lower", "upper"):
            object.__setattr__(self, name, _frozen_array(getattr(self, name)))
        if not (self.point.size == self.lower.size == self.upper.size) or self.point.size < 1:
            raise ArgumentError("forecast point/lower/upper must be equal, non-zero length")
        if not 0.0 < self.level < 1.0:
            raise ArgumentError(f"level must lie in (0, 1), got {self.level}")

    def __len__(self) -> int:
        return int(self.point.size)

    @property
    def years(self) -> np.ndarray:
        return np.arange(self.start_year, self.start_year + len(self))

    def half_width(self) -> np.ndarray:
        return (self.upper - self.lower) / 2.0

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame(
            {"year": self.years, "point": self.point, "lower": self.lower, "upper": self.upper}
        )


def difference(series: TimeSeries, d: int) -> TimeSeries:
    """d-th order forward difference; start year advances by d"""
    if d < 0:
        raise ArgumentError(f"differencing order must be non-negative, got {d}")
    if len(series) <= d:
        raise InsufficientDataError(
            f"series {series.label!r} has {len(series)} values, cannot difference {d} times"
        )
    return series.with_values(np.diff(series.values, n=d), start_year=series.start_year + d)


def difference_pivots(series: TimeSeries, d: int, at: str = "end") -> List[float]:
    """
    Pivot vector for `integrate`: [level, 1st difference, ..., (d-1)-th difference],
    all taken at one year. at="end" uses the last year (forecasting); at="start"
    uses the year just before the first d-times-differenced value (round trips).
    """
    if at not in ("end", "start"):
        raise ArgumentError(f"pivot position must be 'end' or 'start', got {at!r}")
    if len(series) < d:
        raise InsufficientDataError(f"need at least {d} values to take {d} pivots")
    pivots = []
    cascade = series.values
    for k in range(d):
        # cascade is the k-th difference, its index 0 belongs to position k of the original
        pivots.append(float(cascade[-1] if at == "end" else cascade[d - 1 - k]))
        cascade = np.diff(cascade)
    return pivots


def integrate(differenced: TimeSeries, pivots: Sequence[float], d: int) -> TimeSeries:
    """
    Inverse of `difference`: rebuild levels for the years of `differenced`
    from the d pivots of the preceding year (see `difference_pivots`).
    """
    if d < 0:
        raise ArgumentError(f"integration order must be non-negative, got {d}")
    if len(pivots) != d:
        raise ArgumentError(f"expected {d} pivots, got {len(pivots)}")
    current = differenced.values
    for k in reversed(range(d)):
        # sequential accumulation from the pivot keeps integer-valued data exact
        current = np.cumsum(np.concatenate([[float(pivots[k])], current]))[1:]
    return differenced.with_values(current)


def sample_acf(series: TimeSeries, max_lag: int) -> np.ndarray:
    """Biased sample autocorrelation for lags 1..max_lag"""
    if max_lag < 1:
        raise ArgumentError(f"max_lag must be positive, got {max_lag}")
    n = len(series)
    if n <= max_lag:
        raise InsufficientDataError(f"series of length {n} too short for {max_lag} lags")
    dev = series.values - series.values.mean()
    gamma0 = float(np.dot(dev, dev))
    if gamma0 == 0.0 or np.ptp(series.values) == 0.0:
        raise DegenerateSeriesError(f"series {series.label!r} is constant")
    return np.array([np.dot(dev[k:], dev[:n - k]) for k in range(1, max_lag + 1)]) / gamma0


def align_panel(series_list: Sequence[TimeSeries]) -> Tuple[TimeSeries, ...]:
    """Trim every series to the common year overlap, preserving input order"""
    if not series_list:
        raise ArgumentError("align_panel needs at least one series")
    first = max(s.start_year for s in series_list)
    last = min(s.end_year for s in series_list)
    if first > last:
        spans = ", ".join(f"{s.label or '?'} {s.start_year}-{s.end_year}" for s in series_list)
        raise NoOverlapError(f"series share no common years: {spans}")
    return tuple(s.slice_years(first, last) for s in series_list)
