"""Daily time-series container, CSV round-trip, and seasonal standardisation.

A :class:`DailySeries` is a run of consecutive calendar days with one value
per day and an explicit missing mask.  Seasonal structure (an annual cycle in
both mean and spread) is removed by :class:`SeasonalStandardizer`, which
learns smoothed day-of-year mean and standard-deviation curves and maps the
series to approximately unit-variance anomalies.
"""

from __future__ import annotations

import csv
import datetime as dt
import math
from dataclasses import dataclass, field

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin

from .exceptions import (
    CollinearityError,
    CoverageError,
    DegenerateVarianceError,
    IntegrityError,
    ParseError,
)
from .validation import as_bool_mask, as_float_vector, check_fraction

__all__ = [
    "DailySeries",
    "SeasonalProfile",
    "SeasonalStandardizer",
    "standardize_seasonal",
    "nao_adjust",
]


@dataclass
class DailySeries:
    """Values on consecutive calendar days starting at ``start_date``.

    Parameters
    ----------
    start_date : datetime.date
        Calendar date of the first entry.
    values : ndarray of float
        One value per day.  Entries flagged missing may hold anything
        (conventionally NaN).
    missing_mask : ndarray of bool
        True where the observation is missing.  Same length as ``values``.
    """

    start_date: dt.date
    values: np.ndarray
    missing_mask: np.ndarray = field(default=None)  # type: ignore[assignment]

    def __post_init__(self):
        self.values = as_float_vector(self.values, "values")
        self.missing_mask = as_bool_mask(self.missing_mask, len(self.values), "missing_mask")
        if not isinstance(self.start_date, dt.date):
            raise TypeError("start_date must be a datetime.date")
        # NaN values are missing whether or not the caller said so.
        self.missing_mask = self.missing_mask | np.isnan(self.values)

    def __len__(self) -> int:
        return len(self.values)

    @property
    def n_observed(self) -> int:
        return int((~self.missing_mask).sum())

    @property
    def missing_fraction(self) -> float:
        return float(self.missing_mask.mean()) if len(self) else 0.0

    @property
    def dates(self) -> np.ndarray:
        """All dates as numpy datetime64[D]."""
        start = np.datetime64(self.start_date.isoformat(), "D")
        return start + np.arange(len(self.values))

    @property
    def end_date(self) -> dt.date:
        return self.start_date + dt.timedelta(days=len(self) - 1)

    @property
    def years(self) -> np.ndarray:
        """Calendar year of each entry."""
        return self.dates.astype("datetime64[Y]").astype(int) + 1970

    @property
    def day_of_year(self) -> np.ndarray:
        """Day of year, 1..366 (366 occurs only in leap years)."""
        d = self.dates
        return (d - d.astype("datetime64[Y]")).astype(int) + 1

    def observed_values(self) -> np.ndarray:
        return self.values[~self.missing_mask]

    def with_values(self, values, missing_mask=None) -> "DailySeries":
        """New series on the same calendar with different values."""
        mask = self.missing_mask if missing_mask is None else missing_mask
        return DailySeries(self.start_date, np.asarray(values, dtype=float), np.array(mask, dtype=bool))

    # ------------------------------------------------------------------ CSV

    @classmethod
    def from_csv(cls, path) -> "DailySeries":
        """Read a ``date,value`` CSV (ISO dates, empty value = missing).

        Dates need not be contiguous in the file; the series spans the full
        range from the earliest to the latest date and any day without a row
        is marked missing.  Duplicate dates raise :class:`IntegrityError`.
        """
        entries: dict[dt.date, float | None] = {}
        with open(path, newline="") as fh:
            reader = csv.reader(fh)
            header = next(reader, None)
            if header is None or [h.strip() for h in header[:2]] != ["date", "value"]:
                raise ParseError(f"expected header 'date,value', got {header!r}", 1)
            for lineno, row in enumerate(reader, start=2):
                if not row or (len(row) == 1 and not row[0].strip()):
                    continue
                if len(row) != 2:
                    raise ParseError(f"expected 2 fields, got {len(row)}", lineno)
                try:
                    date = dt.date.fromisoformat(row[0].strip())
                except ValueError as exc:
                    raise ParseError(f"bad date {row[0]!r}: {exc}", lineno) from None
                raw = row[1].strip()
                if raw == "":
                    value = None
                else:
                    try:
                        value = float(raw)
                    except ValueError:
                        raise ParseError(f"bad value {row[1]!r}", lineno) from None
                if date in entries:
                    raise IntegrityError(f"duplicate date {date.isoformat()} in {path}")
                entries[date] = value
        if not entries:
            raise ParseError("no data rows", 2)
        start, end = min(entries), max(entries)
        n = (end - start).days + 1
        values = np.full(n, np.nan)
        mask = np.ones(n, dtype=bool)
        for date, value in entries.items():
            i = (date - start).days
            if value is not None:
                values[i] = value
                mask[i] = False
        return cls(start, values, mask)

    def to_csv(self, path) -> None:
        """Write the series as ``date,value`` rows, one per calendar day."""
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["date", "value"])
            for date, value, missing in zip(self.dates, self.values, self.missing_mask):
                writer.writerow([str(date), "" if missing else repr(float(value))])


@dataclass
class SeasonalProfile:
    """Smoothed day-of-year mean and standard-deviation curves.

    Both arrays have 366 entries (index = day of year - 1); day 366 shares
    the estimate of day 365 because it occurs in leap years only.
    """

    mean_by_doy: np.ndarray
    sd_by_doy: np.ndarray
    span: float

    def __post_init__(self):
        self.mean_by_doy = as_float_vector(self.mean_by_doy, "mean_by_doy")
        self.sd_by_doy = as_float_vector(self.sd_by_doy, "sd_by_doy")
        if len(self.mean_by_doy) != 366 or len(self.sd_by_doy) != 366:
            raise ValueError("profile curves must have 366 entries")

    def standardize(self, series: DailySeries) -> DailySeries:
        idx = series.day_of_year - 1
        z = (series.values - self.mean_by_doy[idx]) / self.sd_by_doy[idx]
        z = np.where(series.missing_mask, np.nan, z)
        return series.with_values(z)

    def restore(self, series: DailySeries) -> DailySeries:
        """Invert :meth:`standardize`."""
        idx = series.day_of_year - 1
        x = series.values * self.sd_by_doy[idx] + self.mean_by_doy[idx]
        x = np.where(series.missing_mask, np.nan, x)
        return series.with_values(x)


def _tricube(u: np.ndarray) -> np.ndarray:
    w = np.clip(1.0 - np.abs(u) ** 3, 0.0, None)
    return w**3


def _circular_loess(y: np.ndarray, span: float) -> np.ndarray:
    """Local quadratic regression on a circular axis (index = position).

    ``span`` is the fraction of all points used in each local fit; the window
    is symmetric around the target point with tricube distance weights, and
    wraps around the ends of the array.
    """
    m = len(y)
    half = max(3, math.ceil(span * m / 2.0))
    if 2 * half + 1 > m:
        half = (m - 1) // 2
    offsets = np.arange(-half, half + 1)
    u = offsets / float(half + 1)
    w = _tricube(u)
    design = np.column_stack([np.ones_like(u), u, u * u])
    wd = design * w[:, None]
    # Normal equations are identical at every target point, so factor once.
    ata = design.T @ wd
    smoothed = np.empty(m)
    for i in range(m):
        window = y[(i + offsets) % m]
        beta = np.linalg.solve(ata, wd.T @ window)
        smoothed[i] = beta[0]
    return smoothed


class SeasonalStandardizer(BaseEstimator, TransformerMixin):
    """Removes the annual cycle in mean and spread from a daily series.

    For every day-of-year band the mean over years is taken and smoothed
    along the (circular) day-of-year axis by loess; the same is then done for
    the standard deviation of the mean-adjusted values.  ``transform`` maps a
    series to ``(x - mean(doy)) / sd(doy)``.

    Parameters
    ----------
    span : float, default 0.3
        Loess span as a fraction of the 365 day-of-year bands.
    """

    def __init__(self, span: float = 0.3):
        self.span = span

    def fit(self, series: DailySeries, y=None) -> "SeasonalStandardizer":
        check_fraction(self.span, "span")
        band = np.minimum(series.day_of_year, 365) - 1  # 0..364, day 366 pooled with 365
        valid = ~series.missing_mask
        counts = np.bincount(band[valid], minlength=365)
        if counts.min() < 2:
            worst = int(np.argmin(counts)) + 1
            raise CoverageError(
                f"day-of-year band {worst} has {counts.min()} observations; "
                "need at least two years of coverage for every band"
            )
        sums = np.bincount(band[valid], weights=series.values[valid], minlength=365)
        raw_mean = sums / counts
        mean_curve = _circular_loess(raw_mean, self.span)

        centered = series.values - mean_curve[band]
        sq = np.bincount(band[valid], weights=centered[valid] ** 2, minlength=365)
        # Per-band standard deviation around the smoothed mean.  "Zero" is
        # judged relative to the data scale: smoothing a constant series
        # leaves float-epsilon residue that must still count as degenerate.
        raw_sd = np.sqrt(sq / np.maximum(counts - 1, 1))
        floor = 1e-12 * max(1.0, float(np.abs(raw_mean).max()))
        if np.any(raw_sd <= floor):
            worst = int(np.argmin(raw_sd)) + 1
            raise DegenerateVarianceError(f"day-of-year band {worst} has zero variance")
        sd_curve = _circular_loess(raw_sd, self.span)
        if np.any(sd_curve <= floor):
            worst = int(np.argmin(sd_curve)) + 1
            raise DegenerateVarianceError(
                f"smoothed standard deviation is non-positive at day-of-year {worst}"
            )
        self.profile_ = SeasonalProfile(
            mean_by_doy=np.append(mean_curve, mean_curve[-1]),
            sd_by_doy=np.append(sd_curve, sd_curve[-1]),
            span=self.span,
        )
        return self

    def transform(self, series: DailySeries) -> DailySeries:
        return self.profile_.standardize(series)

    def inverse_transform(self, series: DailySeries) -> DailySeries:
        return self.profile_.restore(series)


def standardize_seasonal(series: DailySeries, span: float = 0.3):
    """Seasonally standardize ``series``; returns ``(standardized, profile)``."""
    est = SeasonalStandardizer(span=span).fit(series)
    return est.transform(series), est.profile_


def nao_adjust(series: DailySeries, covariate: DailySeries) -> DailySeries:
    """Regress a daily series on a covariate index and return the residuals.

    The regression ``x_t = b0 + b1 * c_t`` is fit by least squares over the
    dates where both series are observed.  Every non-missing date of
    ``series`` must be covered by the covariate; the result keeps the
    calendar and missing mask of ``series``.
    """
    offset = (covariate.start_date - series.start_date).days
    n = len(series)
    src = np.arange(len(covariate)) + offset
    inside = (src >= 0) & (src < n)
    cov_on_series = np.full(n, np.nan)
    cov_on_series[src[inside]] = np.where(
        covariate.missing_mask[inside], np.nan, covariate.values[inside]
    )

    obs = ~series.missing_mask
    if not obs.any():
        raise CoverageError("series has no observed values")
    uncovered = obs & np.isnan(cov_on_series)
    if uncovered.any():
        first = series.dates[uncovered][0]
        if not (obs & ~np.isnan(cov_on_series)).any():
            raise CoverageError("series and covariate share no overlapping dates")
        raise CoverageError(
            f"covariate missing on {int(uncovered.sum())} observed dates "
            f"(first: {first})"
        )

    x = cov_on_series[obs]
    y = series.values[obs]
    if np.ptp(x) == 0.0:
        raise CollinearityError("covariate is constant on the overlap")
    xc = x - x.mean()
    slope = float(xc @ (y - y.mean()) / (xc @ xc))
    intercept = float(y.mean() - slope * x.mean())
    resid = np.full(n, np.nan)
    resid[obs] = y - (intercept + slope * x)
    return series.with_values(resid)
