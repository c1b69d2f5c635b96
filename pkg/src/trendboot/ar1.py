"""First-order autoregressive fitting, simulation, and mean-variance algebra."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.signal import lfilter

from .exceptions import InsufficientDataError
from .validation import as_float_vector, check_positive_int, rng_from_seed

__all__ = ["AR1Fit", "fit_ar1", "ar1_mean_variance", "simulate_ar1_trend"]

_R_CLAMP = 0.999


@dataclass(frozen=True)
class AR1Fit:
    """Yule-Walker AR(1) fit: ``x_t = r * x_{t-1} + innovation``."""

    r: float
    innovation_sd: float
    n_used: int


def fit_ar1(x, missing_mask=None) -> AR1Fit:
    """Fit an AR(1) by the lag-1 sample autocorrelation.

    ``r`` is the lag-1 autocovariance over pairs where both entries are
    observed, divided by the sample variance of all observed entries; it is
    clamped to ``(-0.999, 0.999)`` so downstream variance formulas stay
    finite.  ``innovation_sd`` is ``sample_sd * sqrt(1 - r^2)``.

    NaNs count as missing.  Raises :class:`InsufficientDataError` when fewer
    than 10 consecutive observed pairs exist.
    """
    x = as_float_vector(x, "x")
    missing = np.isnan(x)
    if missing_mask is not None:
        missing = missing | np.asarray(missing_mask, dtype=bool)
    obs = ~missing
    pair = obs[:-1] & obs[1:]
    n_pairs = int(pair.sum())
    if n_pairs < 10:
        raise InsufficientDataError(
            f"need at least 10 consecutive observed pairs, got {n_pairs}"
        )
    vals = x[obs]
    mean = vals.mean()
    gamma0 = float(np.mean((vals - mean) ** 2))
    if gamma0 == 0.0:
        # A constant series carries no dependence information.
        return AR1Fit(r=0.0, innovation_sd=0.0, n_used=n_pairs)
    left = x[:-1][pair] - mean
    right = x[1:][pair] - mean
    gamma1 = float(np.mean(left * right))
    r = float(np.clip(gamma1 / gamma0, -_R_CLAMP, _R_CLAMP))
    innovation_sd = float(np.sqrt(gamma0 * (1.0 - r * r)))
    return AR1Fit(r=r, innovation_sd=innovation_sd, n_used=n_pairs)


def ar1_mean_variance(r: float, marginal_var: float, n: int) -> float:
    """Exact variance of the mean of ``n`` stationary AR(1) draws.

    ``Var(mean) = (marginal_var / n) * (1 + 2 * sum_{k=1}^{n-1} (1 - k/n) r^k)``,
    evaluated in closed form.
    """
    n = check_positive_int(n, "n")
    if not -1.0 < r < 1.0:
        raise ValueError(f"r must lie in (-1, 1), got {r}")
    if marginal_var < 0:
        raise ValueError("marginal_var must be non-negative")
    if n == 1 or r == 0.0:
        return marginal_var / n
    # sum r^k, k=1..n-1  and  sum k r^k, k=1..n-1
    geo = r * (1.0 - r ** (n - 1)) / (1.0 - r)
    ramp = r * (1.0 - n * r ** (n - 1) + (n - 1) * r**n) / (1.0 - r) ** 2
    factor = 1.0 + 2.0 * (geo - ramp / n)
    return marginal_var / n * factor


def _simulate_ar1_batch(
    n_series: int, n: int, r: float, innovation_sd: float, rng: np.random.Generator
) -> np.ndarray:
    """Stationary AR(1) paths as rows of an ``(n_series, n)`` array.

    Row ``i`` is a deterministic function of the generator state and ``i``
    alone (the innovation matrix is drawn row-major), so per-path results do
    not depend on how many paths are requested alongside.
    """
    eta = rng.standard_normal((n_series, n)) * innovation_sd
    if r == 0.0:
        return eta
    # Scaling the first innovation to the marginal sd makes the start exact.
    eta[:, 0] /= np.sqrt(1.0 - r * r)
    return lfilter([1.0], [1.0, -r], eta, axis=1)


def simulate_ar1_trend(
    n: int, trend: float, r: float, innovation_sd: float, seed=None
) -> np.ndarray:
    """Simulate ``y_t = trend * t + e_t`` with stationary AR(1) errors.

    ``t`` runs 1..n.  ``e_1`` is drawn from the stationary law
    ``N(0, innovation_sd^2 / (1 - r^2))`` so the whole path is stationary.
    """
    n = check_positive_int(n, "n")
    if not -1.0 < r < 1.0:
        raise ValueError(f"r must lie in (-1, 1), got {r}")
    if innovation_sd < 0:
        raise ValueError("innovation_sd must be non-negative")
    rng = rng_from_seed(seed)
    errors = _simulate_ar1_batch(1, n, r, innovation_sd, rng)[0]
    return trend * np.arange(1, n + 1, dtype=float) + errors
