"""Automatic block-length selection for the moving-block bootstrap.

Implements the correlogram-based rule of Politis and White: find the lag
beyond which autocorrelations look insignificant, estimate the spectral
quantities G and D through a flat-top lag window, and convert them into the
MSE-optimal block length for the circular block bootstrap.
"""

from __future__ import annotations

import math

import numpy as np

from .exceptions import InsufficientDataError
from .validation import as_float_vector

__all__ = ["politis_white_block_length"]


def _flat_top(u: np.ndarray) -> np.ndarray:
    au = np.abs(u)
    return np.where(au <= 0.5, 1.0, np.where(au <= 1.0, 2.0 * (1.0 - au), 0.0))


def _autocovariances(x: np.ndarray, max_lag: int) -> np.ndarray:
    """Biased (1/n) sample autocovariances at lags 0..max_lag."""
    n = len(x)
    xc = x - x.mean()
    acov = np.empty(max_lag + 1)
    for k in range(max_lag + 1):
        acov[k] = (xc[: n - k] @ xc[k:]) / n
    return acov


def politis_white_block_length(x) -> int:
    """MSE-optimal circular-bootstrap block length for a stationary series.

    Needs at least 100 observations.  The result is clamped to
    ``[1, ceil(3 * sqrt(n))]``.
    """
    x = as_float_vector(x, "x")
    x = x[~np.isnan(x)]
    n = len(x)
    if n < 100:
        raise InsufficientDataError(f"block-length selection needs n >= 100, got {n}")

    kn = max(5, math.ceil(math.sqrt(math.log10(n))))
    m_max = math.ceil(math.sqrt(n)) + kn
    threshold = 2.0 * math.sqrt(math.log10(n) / n)

    acov = _autocovariances(x, m_max)
    # Relative floor: a constant series leaves float-epsilon residue after
    # mean removal, which must still count as zero variance.
    scale = max(1.0, float(np.abs(x).max()))
    if acov[0] <= (1e-12 * scale) ** 2:
        return 1
    rho = acov[1:] / acov[0]
    insignificant = np.abs(rho) < threshold

    # Smallest lag followed by a run of kn insignificant autocorrelations.
    m_hat = None
    for m in range(0, m_max - kn + 1):
        if insignificant[m : m + kn].all():
            m_hat = m
            break
    if m_hat is None:
        significant = np.flatnonzero(~insignificant)
        m_hat = int(significant[-1]) + 1 if len(significant) else 0

    b_cap = math.ceil(3.0 * math.sqrt(n))
    if m_hat == 0:
        return 1
    big_m = min(2 * m_hat, m_max)

    lags = np.arange(1, big_m + 1)
    lam = _flat_top(lags / big_m)
    g_hat = 2.0 * float(lam * lags @ acov[1 : big_m + 1])
    d_hat = (4.0 / 3.0) * (acov[0] + 2.0 * float(lam @ acov[1 : big_m + 1])) ** 2
    if d_hat <= 0 or g_hat <= 0:
        return 1
    b = math.ceil((2.0 * g_hat**2 / d_hat) ** (1.0 / 3.0) * n ** (1.0 / 3.0))
    return int(min(max(b, 1), b_cap))
