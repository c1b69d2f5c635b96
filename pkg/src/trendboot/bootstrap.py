"""Residual bootstraps for the uncertainty of a fitted linear trend slope.

All methods share one skeleton: fit the trend, rebuild pseudo-series
``y*_t = slope*t + intercept + e*_t`` from resampled or reweighted residual
noise ``e*``, refit, and collect the slope replicates.  Because the refit
slope is a fixed linear functional of ``e*`` (the projection onto the
centred day index), replicates are evaluated through that projection
directly instead of materializing every pseudo-series.

Methods
-------
``efron``
    ``e*`` drawn with replacement from the observed residuals.
``wild``
    ``e*_t = w_t * r_t`` with independent mean-0/variance-1 multipliers
    (Rademacher signs by default), which keeps each residual's magnitude
    but destroys serial dependence.
``dep_wild_ar1``
    ``e* = sigma_res * w`` where ``w`` is a stationary unit-variance AR(1)
    multiplier path and ``sigma_res`` the residual standard deviation.  A
    per-index product with AR(1) multipliers has long-run variance factor
    ``(1 + r*rho)/(1 - r*rho)`` against the residuals' own ``rho``, which
    stays below the residuals' factor ``(1 + rho)/(1 - rho)`` for every
    ``r < 1``; scaling whole multiplier paths instead reproduces the serial
    dependence of the residuals exactly when ``r`` matches ``rho``, which is
    what the variance-matching selector targets.
``dep_wild_kernel``
    ``e*_t = w_t * r_t`` with multipliers from a Gaussian process whose
    autocovariance is the triangular (Bartlett) kernel.  Beyond the
    factorization guard the process is replaced by AR(1) multipliers with
    the same variance of the path mean.
``moving_block``
    ``e*`` pieced together from wrap-around (circular) blocks of the
    mean-centred observations, laid over the fitted line; the block length
    comes from the configuration or the automatic selection rule.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.signal import lfilter

from .ar1 import ar1_mean_variance, fit_ar1
from .blocklength import politis_white_block_length
from .exceptions import InsufficientDataError
from .trend import fit_ols_trend
from .validation import (
    as_bool_mask,
    as_float_vector,
    check_positive_int,
    rng_from_seed,
)
from .weights import (
    KERNEL_N_GUARD,
    WeightProcess,
    _bartlett_banded_factor,
    generate_weight_matrix,
)

__all__ = [
    "QUANTILE_LEVELS",
    "BootstrapConfig",
    "BootstrapResult",
    "bootstrap_trend",
    "select_ar1_weight_param",
    "slope_significance",
]

#: Probability levels reported by every bootstrap run.
QUANTILE_LEVELS = (0.025, 0.05, 0.25, 0.5, 0.75, 0.95, 0.975)

_METHODS = ("efron", "wild", "dep_wild_ar1", "dep_wild_kernel", "moving_block")

#: Default candidate grid for the AR(1) multiplier parameter: 0.05 .. 0.95.
DEFAULT_R_GRID = tuple(round(0.05 * i, 2) for i in range(1, 20))

# Replicates are processed in chunks of at most this many matrix elements.
_CHUNK_ELEMENTS = 8_000_000

_ALLOWED_PROCESS = {
    "wild": ("iid_rademacher", "iid_normal"),
    "dep_wild_ar1": ("ar1",),
    "dep_wild_kernel": ("kernel_mvn",),
}


@dataclass(frozen=True)
class BootstrapConfig:
    """Method, replicate count, and method parameters for one bootstrap run.

    ``weight_process`` is optional and only valid for the weighted methods;
    each of those accepts only its own kind (``wild``: an iid kind,
    ``dep_wild_ar1``: ``ar1``, ``dep_wild_kernel``: ``kernel_mvn``).  When
    omitted, ``wild`` uses Rademacher signs, ``dep_wild_ar1`` selects its
    parameter from the residuals, and ``dep_wild_kernel`` uses bandwidth 25.
    ``block_length`` (a positive integer or ``"auto"``) applies only to
    ``moving_block``.
    """

    method: str
    replicates: int = 500
    weight_process: WeightProcess | None = None
    block_length: int | str | None = None
    seed: int | np.random.Generator | None = None

    def __post_init__(self):
        if self.method not in _METHODS:
            raise ValueError(f"unknown bootstrap method {self.method!r}; choose from {_METHODS}")
        check_positive_int(self.replicates, "replicates")
        if self.block_length is not None:
            if self.method != "moving_block":
                raise ValueError("block_length applies only to the moving_block method")
            if self.block_length != "auto":
                object.__setattr__(
                    self, "block_length", check_positive_int(self.block_length, "block_length")
                )
        if self.weight_process is not None:
            allowed = _ALLOWED_PROCESS.get(self.method)
            if allowed is None:
                raise ValueError(f"method {self.method!r} does not take a weight process")
            if self.weight_process.kind not in allowed:
                raise ValueError(
                    f"method {self.method!r} requires a weight process of kind "
                    f"{allowed}, got {self.weight_process.kind!r}"
                )


@dataclass
class BootstrapResult:
    """Slope replicates with their quantiles and the original point estimate.

    ``selected_r`` is set by ``dep_wild_ar1`` (the chosen multiplier
    parameter) and by ``dep_wild_kernel`` when the large-``n`` AR(1)
    substitution kicked in; ``block_length`` is set by ``moving_block``.
    """

    method: str
    point_estimate: float
    slope_replicates: np.ndarray = field(repr=False)
    quantiles: dict = field(default_factory=dict)
    selected_r: float | None = None
    block_length: int | None = None

    def __post_init__(self):
        self.slope_replicates = as_float_vector(self.slope_replicates, "slope_replicates")
        levels = sorted(self.quantiles)
        if any(not 0.0 < lv < 1.0 for lv in levels):
            raise ValueError("quantile levels must lie in (0, 1)")
        values = [self.quantiles[lv] for lv in levels]
        if any(b < a for a, b in zip(values, values[1:])):
            raise ValueError("quantiles must be monotone in the level")

    def interval(self, level: float = 0.95) -> tuple[float, float]:
        """Equal-tailed bootstrap interval at the given confidence level."""
        if not 0.0 < level < 1.0:
            raise ValueError(f"level must lie in (0, 1), got {level}")
        alpha = (1.0 - level) / 2.0
        low = [lv for lv in self.quantiles if abs(lv - alpha) < 1e-9]
        high = [lv for lv in self.quantiles if abs(1.0 - lv - alpha) < 1e-9]
        if low and high:
            return float(self.quantiles[low[0]]), float(self.quantiles[high[0]])
        lo, hi = np.quantile(self.slope_replicates, [alpha, 1.0 - alpha])
        return float(lo), float(hi)


def slope_significance(result: BootstrapResult) -> float:
    """Fraction of slope replicates at or below zero.

    A one-sided bootstrap p-value for a positive trend.  Needs at least 100
    replicates to be meaningful.
    """
    reps = result.slope_replicates
    if len(reps) < 100:
        raise InsufficientDataError(
            f"slope significance needs at least 100 replicates, got {len(reps)}"
        )
    return float(np.mean(reps <= 0.0))


def _ar1_innovation_projection(v: np.ndarray, r: float) -> np.ndarray:
    """Coefficients q with ``sum_t w_t v_t = sum_s q_s z_s`` for AR(1) ``w``.

    ``w`` is the stationary unit-marginal-variance AR(1) path built from iid
    standard normal innovations ``z`` (first innovation at marginal scale).
    ``q_s = g_s * sum_{t >= s} r^(t-s) v_t`` with ``g_1 = 1`` and
    ``g_s = sqrt(1 - r^2)`` otherwise; the inner sum is a reversed
    exponential smoothing of ``v``.
    """
    u = lfilter([1.0], [1.0, -r], v[::-1])[::-1]
    q = u * math.sqrt(1.0 - r * r)
    q[0] = u[0]
    return q


def _banded_transpose_matvec(lb: np.ndarray, v: np.ndarray) -> np.ndarray:
    """``L^T v`` for a lower-banded Cholesky factor ``lb[d, j] = L[j+d, j]``."""
    width, n = lb.shape
    u = np.zeros(n)
    for d in range(width):
        u[: n - d] += lb[d, : n - d] * v[d:]
    return u


def _row_chunks(total_rows: int, n_cols: int):
    step = max(1, _CHUNK_ELEMENTS // max(n_cols, 1))
    for lo in range(0, total_rows, step):
        yield lo, min(lo + step, total_rows)


def select_ar1_weight_param(
    residuals,
    candidate_grid=DEFAULT_R_GRID,
    inner_replicates: int = 200,
    seed=None,
    *,
    return_curve: bool = False,
):
    """Pick the AR(1) multiplier parameter by variance matching.

    Fits an AR(1) coefficient ``rho`` to the residuals, computes the exact
    variance of the mean of such a process as the target, and for every
    candidate ``r`` estimates the variance of the mean of
    ``sigma_res * w`` over ``inner_replicates`` simulated unit-variance
    AR(1) multiplier paths ``w``.  Returns the candidate minimizing the
    absolute difference between target and estimate.  All candidates share
    one set of underlying normal draws, so the Monte Carlo noise largely
    cancels when candidates are compared.

    With ``return_curve=True``, returns ``(r_hat, grid, objective)`` where
    ``objective[i]`` is the matching error of ``grid[i]``.
    """
    res = as_float_vector(residuals, "residuals")
    res = res[~np.isnan(res)]
    m = len(res)
    if m < 100:
        raise InsufficientDataError(
            f"AR(1) multiplier selection needs at least 100 residuals, got {m}"
        )
    grid = [float(r) for r in np.asarray(candidate_grid, dtype=float).ravel()]
    if not grid:
        raise ValueError("candidate_grid must not be empty")
    for r in grid:
        if not 0.0 < r < 1.0:
            raise ValueError(f"candidate r must lie in (0, 1), got {r}")
    inner = check_positive_int(inner_replicates, "inner_replicates")

    rho = fit_ar1(res).r
    marginal_var = float(res.var())
    target = ar1_mean_variance(rho, marginal_var, m)

    rng = rng_from_seed(seed)
    z = rng.standard_normal((inner, m))
    ones = np.ones(m)
    objective = np.empty(len(grid))
    for j, r in enumerate(grid):
        # Mean of an AR(1) path is a fixed linear functional of its
        # innovations, so each candidate needs one matrix-vector product.
        q = _ar1_innovation_projection(ones, r) / m
        means = z @ q
        estimate = marginal_var * float(means.var(ddof=1))
        objective[j] = abs(target - estimate)
    best = int(np.argmin(objective))
    if return_curve:
        return grid[best], np.asarray(grid), objective
    return grid[best]


def bootstrap_trend(values, config: BootstrapConfig, missing_mask=None) -> BootstrapResult:
    """Bootstrap the slope of a linear trend fitted to a daily sequence.

    Missing entries (mask or NaN) are excluded from every refit; dependent
    noise constructions still run on the full day grid so serial structure
    is preserved across gaps.  Replicate ``i`` is a deterministic function
    of the configuration seed and ``i`` alone.
    """
    x = as_float_vector(values, "series")
    n = len(x)
    mask = as_bool_mask(missing_mask, n, "missing_mask") | np.isnan(x)
    fit = fit_ols_trend(x, mask)
    obs = ~mask
    t = np.arange(1, n + 1, dtype=float)
    tc_full = np.where(obs, t - t[obs].mean(), 0.0)
    s_tt = float(tc_full @ tc_full)
    res_full = np.where(obs, fit.residuals, 0.0)

    rng = rng_from_seed(config.seed)
    n_rep = config.replicates
    slopes = np.empty(n_rep)
    selected_r = None
    block_length = None
    method = config.method

    if method == "efron":
        res_obs = fit.residuals[obs]
        tc_obs = tc_full[obs]
        n_obs = len(res_obs)
        for lo, hi in _row_chunks(n_rep, n_obs):
            idx = rng.integers(0, n_obs, size=(hi - lo, n_obs))
            slopes[lo:hi] = res_obs[idx] @ tc_obs / s_tt

    elif method == "wild":
        process = config.weight_process or WeightProcess.iid_rademacher()
        v = res_full * tc_full
        for lo, hi in _row_chunks(n_rep, n):
            w = generate_weight_matrix(process, hi - lo, n, rng)
            slopes[lo:hi] = w @ v / s_tt

    elif method == "dep_wild_ar1":
        if config.weight_process is not None:
            selected_r = float(config.weight_process.r)
        else:
            selected_r = select_ar1_weight_param(
                fit.residuals[obs], inner_replicates=min(n_rep, 200), seed=rng
            )
        sigma_res = float(fit.residuals[obs].std())
        q = _ar1_innovation_projection(tc_full, selected_r) * (sigma_res / s_tt)
        for lo, hi in _row_chunks(n_rep, n):
            z = rng.standard_normal((hi - lo, n))
            slopes[lo:hi] = z @ q

    elif method == "dep_wild_kernel":
        process = config.weight_process or WeightProcess.kernel_mvn()
        bandwidth = int(process.bandwidth)
        v = res_full * tc_full
        if n > KERNEL_N_GUARD:
            # An n x n factorization is off the table; fall back to AR(1)
            # multipliers whose path-mean variance matches the kernel's
            # long-run level (1 + r)/(1 - r) = bandwidth.
            selected_r = (bandwidth - 1.0) / (bandwidth + 1.0)
            q = _ar1_innovation_projection(v, selected_r) / s_tt
        else:
            lb = _bartlett_banded_factor(n, bandwidth)
            q = _banded_transpose_matvec(lb, v) / s_tt
        for lo, hi in _row_chunks(n_rep, n):
            z = rng.standard_normal((hi - lo, n))
            slopes[lo:hi] = z @ q

    else:  # moving_block
        b = config.block_length
        if b is None or b == "auto":
            b = politis_white_block_length(fit.residuals[obs])
        block_length = int(min(b, n))
        centered = np.where(obs, x - x[obs].mean(), 0.0)
        block_id = np.arange(n) // block_length
        within = np.arange(n) - block_id * block_length
        n_blocks = int(block_id[-1]) + 1
        for lo, hi in _row_chunks(n_rep, n):
            starts = rng.integers(0, n, size=(hi - lo, n_blocks))
            src = (starts[:, block_id] + within) % n
            slopes[lo:hi] = centered[src] @ tc_full / s_tt

    slopes += fit.slope_a
    quantiles = {
        float(lv): float(qv) for lv, qv in zip(QUANTILE_LEVELS, np.quantile(slopes, QUANTILE_LEVELS))
    }
    return BootstrapResult(
        method=method,
        point_estimate=fit.slope_a,
        slope_replicates=slopes,
        quantiles=quantiles,
        selected_r=selected_r,
        block_length=block_length,
    )
