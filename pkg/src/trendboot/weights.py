"""Multiplier (weight) processes for residual-weighting bootstraps.

Every process produces weights with mean 0 and variance 1; the serially
dependent variants differ only in their autocovariance:

* ``iid_rademacher`` / ``iid_normal`` -- independent weights.
* ``ar1(r)`` -- stationary AR(1), autocovariance ``r^|i-j|``.
* ``kernel_mvn(bandwidth)`` -- Gaussian with triangular (Bartlett) kernel
  autocovariance ``max(0, 1 - |i-j| / bandwidth)``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import cholesky_banded

from .ar1 import _simulate_ar1_batch
from .validation import check_positive_int, rng_from_seed

__all__ = ["WeightProcess", "generate_weights"]

_KINDS = ("iid_rademacher", "iid_normal", "ar1", "kernel_mvn")

#: Largest n for which the kernel process builds its banded factorization.
KERNEL_N_GUARD = 5000


@dataclass(frozen=True)
class WeightProcess:
    """Specification of a mean-zero, unit-variance weight process."""

    kind: str
    r: float | None = None
    bandwidth: int | None = None

    def __post_init__(self):
        if self.kind not in _KINDS:
            raise ValueError(f"unknown weight process {self.kind!r}; choose from {_KINDS}")
        if self.kind == "ar1":
            if self.r is None or not 0.0 < self.r < 1.0:
                raise ValueError(f"ar1 weights need r in (0, 1), got {self.r}")
        elif self.kind == "kernel_mvn":
            bandwidth = 25 if self.bandwidth is None else self.bandwidth
            object.__setattr__(self, "bandwidth", check_positive_int(bandwidth, "bandwidth"))
        elif self.r is not None or self.bandwidth is not None:
            raise ValueError(f"{self.kind} weights take no parameters")

    @classmethod
    def iid_rademacher(cls) -> "WeightProcess":
        return cls("iid_rademacher")

    @classmethod
    def iid_normal(cls) -> "WeightProcess":
        return cls("iid_normal")

    @classmethod
    def ar1(cls, r: float) -> "WeightProcess":
        return cls("ar1", r=float(r))

    @classmethod
    def kernel_mvn(cls, bandwidth: int = 25) -> "WeightProcess":
        return cls("kernel_mvn", bandwidth=int(bandwidth))


def _bartlett_banded_factor(n: int, bandwidth: int) -> np.ndarray:
    """Lower-banded Cholesky factor of the Bartlett-kernel covariance."""
    width = min(bandwidth, n)
    offsets = np.arange(width)
    # Upper banded storage for cholesky_banded: row i holds diagonal i above main.
    ab = np.zeros((width, n))
    for d in offsets:
        ab[width - 1 - d, d:] = 1.0 - d / bandwidth
    u = cholesky_banded(ab, lower=False)
    # Convert to lower-banded storage: lb[d, j] = L[j + d, j].
    lb = np.zeros((width, n))
    for d in offsets:
        lb[d, : n - d] = u[width - 1 - d, d:]
    return lb


def _banded_matmul(lb: np.ndarray, z: np.ndarray) -> np.ndarray:
    """Rows of ``z`` times the transpose of a lower-banded matrix ``L``."""
    width, n = lb.shape
    out = np.zeros_like(z)
    for d in range(width):
        out[:, d:] += lb[d, : n - d] * z[:, : n - d]
    return out


def generate_weight_matrix(
    process: WeightProcess, n_replicates: int, n: int, rng: np.random.Generator
) -> np.ndarray:
    """Weight sequences as rows of an ``(n_replicates, n)`` array.

    Rows are filled in replicate-major order from the generator, so row ``i``
    depends only on the generator seed and ``i`` -- not on how many
    replicates are drawn in one call.
    """
    if process.kind == "iid_rademacher":
        return rng.integers(0, 2, size=(n_replicates, n)).astype(float) * 2.0 - 1.0
    if process.kind == "iid_normal":
        return rng.standard_normal((n_replicates, n))
    if process.kind == "ar1":
        r = float(process.r)
        return _simulate_ar1_batch(n_replicates, n, r, np.sqrt(1.0 - r * r), rng)
    if process.kind == "kernel_mvn":
        if n > KERNEL_N_GUARD:
            raise ValueError(
                f"kernel_mvn weights require n <= {KERNEL_N_GUARD} for the banded "
                f"factorization, got n = {n}"
            )
        lb = _bartlett_banded_factor(n, int(process.bandwidth))
        z = rng.standard_normal((n_replicates, n))
        return _banded_matmul(lb, z)
    raise AssertionError(process.kind)


def generate_weights(process: WeightProcess, n: int, seed=None) -> np.ndarray:
    """One weight sequence of length ``n`` from the given process."""
    n = check_positive_int(n, "n")
    rng = rng_from_seed(seed)
    return generate_weight_matrix(process, 1, n, rng)[0]
