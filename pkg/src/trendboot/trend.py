"""Linear trend fitting and sliding-start coefficient curves."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .exceptions import CoverageError, InsufficientDataError
from .series import DailySeries
from .validation import as_bool_mask, as_float_vector

__all__ = ["TrendFit", "CoefficientCurve", "fit_ols_trend", "sliding_trend_curve"]


@dataclass(frozen=True)
class TrendFit:
    """Least-squares fit of ``x_t = slope_a * t + intercept_b``.

    ``t`` is the day offset within the fitted segment, starting at 1.
    ``residuals`` has the length of the segment with NaN at missing entries;
    ``n`` is the number of observations actually used.
    """

    slope_a: float
    intercept_b: float
    r_squared: float
    residuals: np.ndarray = field(repr=False)
    n: int


def fit_ols_trend(values, missing_mask=None) -> TrendFit:
    """Fit a straight line against the day index by ordinary least squares.

    The fit uses only non-missing entries (NaNs are missing too).  A segment
    whose observed values are constant gets ``slope_a = 0`` and
    ``r_squared = 0`` by convention.  Fewer than three observations raise
    :class:`InsufficientDataError`.
    """
    x = as_float_vector(values, "values")
    mask = as_bool_mask(missing_mask, len(x), "missing_mask") | np.isnan(x)
    obs = ~mask
    n = int(obs.sum())
    if n < 3:
        raise InsufficientDataError(f"need at least 3 observations to fit a trend, got {n}")
    t = np.arange(1, len(x) + 1, dtype=float)[obs]
    y = x[obs]
    t_mean = t.mean()
    y_mean = y.mean()
    tc = t - t_mean
    s_tt = float(tc @ tc)
    s_ty = float(tc @ (y - y_mean))
    slope = s_ty / s_tt
    sst = float(((y - y_mean) ** 2).sum())
    if sst == 0.0:
        slope = 0.0
    intercept = y_mean - slope * t_mean
    fitted = slope * t + intercept
    res = y - fitted
    if sst == 0.0:
        r2 = 0.0
    else:
        r2 = 1.0 - float((res @ res)) / sst
    residuals = np.full(len(x), np.nan)
    residuals[obs] = res
    return TrendFit(
        slope_a=float(slope),
        intercept_b=float(intercept),
        r_squared=float(r2),
        residuals=residuals,
        n=n,
    )


@dataclass
class CoefficientCurve:
    """Trend slopes over segments with progressively later start years.

    Entry ``k`` is the slope (and R^2) of the segment running from year
    ``first_year + k`` through ``last_year``, with the day index restarting
    at 1 for every segment.  Entries that could not be fit are NaN and
    flagged in ``missing_mask``.
    """

    coeffs: np.ndarray
    r_squareds: np.ndarray
    k_max: int
    first_year: int
    last_year: int
    missing_mask: np.ndarray = field(default=None)  # type: ignore[assignment]

    def __post_init__(self):
        self.coeffs = as_float_vector(self.coeffs, "coeffs")
        self.r_squareds = as_float_vector(self.r_squareds, "r_squareds")
        if self.missing_mask is None:
            self.missing_mask = np.isnan(self.coeffs)
        if not (len(self.coeffs) == len(self.r_squareds) == self.k_max):
            raise ValueError("curve arrays must have length k_max")


def segment_by_years(series: DailySeries, start_year: int, end_year: int) -> DailySeries:
    """Slice a daily series to the calendar years ``start_year..end_year``."""
    years = series.years
    keep = (years >= start_year) & (years <= end_year)
    if not keep.any():
        raise CoverageError(f"series does not cover years {start_year}..{end_year}")
    idx = np.flatnonzero(keep)
    start = series.dates[idx[0]].astype("datetime64[D]").item()
    return DailySeries(start, series.values[idx[0] : idx[-1] + 1], series.missing_mask[idx[0] : idx[-1] + 1])


def sliding_trend_curve(
    series: DailySeries, first_year: int, last_year: int, k_max: int = 30
) -> CoefficientCurve:
    """Slopes of segments starting ``first_year + k`` for ``k = 0..k_max-1``.

    Segments that end up with fewer than three observations (or no calendar
    coverage at all) produce masked NaN entries rather than errors.
    """
    if last_year < first_year:
        raise ValueError("last_year must not precede first_year")
    years = series.years
    if first_year < years[0] or last_year > years[-1]:
        raise CoverageError(
            f"series covers {years[0]}..{years[-1]}, requested {first_year}..{last_year}"
        )
    coeffs = np.full(k_max, np.nan)
    r2s = np.full(k_max, np.nan)
    for k in range(k_max):
        start = first_year + k
        if start > last_year:
            break
        seg = segment_by_years(series, start, last_year)
        try:
            fit = fit_ols_trend(seg.values, seg.missing_mask)
        except InsufficientDataError:
            continue
        coeffs[k] = fit.slope_a
        r2s[k] = fit.r_squared
    return CoefficientCurve(
        coeffs=coeffs,
        r_squareds=r2s,
        k_max=k_max,
        first_year=first_year,
        last_year=last_year,
    )
