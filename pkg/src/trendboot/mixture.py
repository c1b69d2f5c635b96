"""Gaussian mixture fitting with parameterized covariance families.

Covariances decompose as ``volume * orientation * shape``: each family fixes
which of the three vary per component.

* ``EII`` -- one spherical covariance shared by all components.
* ``VII`` -- spherical, per-component volume.
* ``EEE`` -- one full (ellipsoidal) covariance shared by all components.
* ``VEV`` -- shared shape (normalized eigenvalue profile), per-component
  volume and orientation.
* ``VVV`` -- unrestricted per-component covariances.

Model choice maximizes ``bic = 2*loglik - m*log(n)`` (sign flipped from the
usual "smaller is better" convention), where ``m`` counts free parameters.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import solve_triangular
from scipy.special import logsumexp
from sklearn.base import BaseEstimator

from .exceptions import DegenerateComponentError, InsufficientDataError
from .kmeans import ClusterAssignment, KMeans, _as_points
from .validation import check_positive_int, rng_from_seed

__all__ = [
    "FAMILIES",
    "GaussianMixture",
    "MixtureModel",
    "ModelSelection",
    "em_fit",
    "mixture_param_count",
    "select_model",
]

FAMILIES = ("EII", "VII", "EEE", "VEV", "VVV")

_VEV_INNER_TOL = 1e-6
_VEV_INNER_MAX = 100


def _as_seed_sequence(seed) -> np.random.SeedSequence:
    if isinstance(seed, np.random.SeedSequence):
        return seed
    return np.random.SeedSequence(seed)


def mixture_param_count(family: str, k: int, d: int) -> int:
    """Free parameters of a K-component mixture: weights + means + covariances."""
    if family not in FAMILIES:
        raise ValueError(f"unknown covariance family {family!r}; choose from {FAMILIES}")
    k = check_positive_int(k, "k")
    d = check_positive_int(d, "d")
    cov = {
        "EII": 1,
        "VII": k,
        "EEE": d * (d + 1) // 2,
        "VEV": k + (d - 1) + k * d * (d - 1) // 2,
        "VVV": k * d * (d + 1) // 2,
    }[family]
    return (k - 1) + k * d + cov


@dataclass
class MixtureModel:
    """A fitted Gaussian mixture and its selection score."""

    family: str
    k: int
    mixing_weights: np.ndarray
    means: np.ndarray
    covariances: np.ndarray = field(repr=False)
    loglik: float
    bic: float
    converged: bool
    n_iter: int


@dataclass
class ModelSelection:
    """Best model over a (K, family) scan plus the full score table.

    ``table`` rows are dicts with keys ``K``, ``family``, ``bic``,
    ``loglik``, ``converged``; failed fits carry ``error`` instead of
    scores.
    """

    best_model: MixtureModel
    best_assignment: ClusterAssignment
    table: list


def _log_gaussian(x: np.ndarray, mean: np.ndarray, cov: np.ndarray) -> np.ndarray:
    d = x.shape[1]
    chol = np.linalg.cholesky(cov)
    z = solve_triangular(chol, (x - mean).T, lower=True)
    maha = (z**2).sum(axis=0)
    logdet = 2.0 * np.log(np.diag(chol)).sum()
    return -0.5 * (d * np.log(2.0 * np.pi) + logdet + maha)


def _covariances_from_scatter(
    family: str,
    scatters: np.ndarray,
    counts: np.ndarray,
    n: int,
    floor: float,
    shape_state: np.ndarray | None,
):
    """Family-constrained covariance update from weighted scatter matrices.

    ``scatters[k]`` is ``sum_i resp_ik (x_i - mu_k)(x_i - mu_k)^T``;
    ``counts[k]`` the effective component size.  Returns the covariance
    stack and (for VEV) the shared-shape vector carried between calls.
    """
    k, d = len(scatters), scatters.shape[1]
    covs = np.empty((k, d, d))
    eye = np.eye(d)

    if family == "EII":
        sigma2 = max(float(np.trace(scatters.sum(axis=0))) / (n * d), floor)
        covs[:] = sigma2 * eye
        return covs, shape_state

    if family == "VII":
        for j in range(k):
            sigma2 = max(float(np.trace(scatters[j])) / (counts[j] * d), floor)
            covs[j] = sigma2 * eye
        return covs, shape_state

    if family == "EEE":
        pooled = scatters.sum(axis=0) / n
        vals, vecs = np.linalg.eigh(pooled)
        pooled = (vecs * np.maximum(vals, floor)) @ vecs.T
        covs[:] = pooled
        return covs, shape_state

    if family == "VVV":
        for j in range(k):
            vals, vecs = np.linalg.eigh(scatters[j] / counts[j])
            covs[j] = (vecs * np.maximum(vals, floor)) @ vecs.T
        return covs, shape_state

    # VEV: covariance_k = volume_k * orientation_k @ diag(shape) @ orientation_k^T
    # with one shape vector (descending, det 1) shared by every component.
    omegas = np.empty((k, d))
    rotations = np.empty((k, d, d))
    for j in range(k):
        vals, vecs = np.linalg.eigh(scatters[j])
        order = np.argsort(vals)[::-1]
        omegas[j] = np.maximum(vals[order], floor * counts[j])
        rotations[j] = vecs[:, order]
    shape = shape_state if shape_state is not None else np.ones(d)
    volumes = np.empty(k)
    for _ in range(_VEV_INNER_MAX):
        for j in range(k):
            volumes[j] = (omegas[j] / shape).sum() / (d * counts[j])
        raw = (omegas / volumes[:, None]).sum(axis=0)
        new_shape = np.exp(np.log(raw) - np.log(raw).mean())
        delta = float(np.abs(new_shape - shape).max() / np.abs(shape).max())
        shape = new_shape
        if delta < _VEV_INNER_TOL:
            break
    for j in range(k):
        eigvals = np.maximum(volumes[j] * shape, floor)
        covs[j] = (rotations[j] * eigvals) @ rotations[j].T
    return covs, shape


class GaussianMixture(BaseEstimator):
    """EM-fitted Gaussian mixture with a constrained covariance family.

    Initialization is k-means++/Lloyd followed by one hard-assignment
    M-step; ``n_init`` independent restarts keep the best final
    log-likelihood.  EM stops when the log-likelihood improves by less than
    ``tol * |loglik|`` or after ``max_iter`` sweeps.  Covariance
    eigenvalues are floored at ``1e-8`` times the average data variance.
    """

    def __init__(
        self,
        n_components: int = 1,
        family: str = "VEV",
        n_init: int = 5,
        max_iter: int = 500,
        tol: float = 1e-8,
        random_state=None,
    ):
        self.n_components = n_components
        self.family = family
        self.n_init = n_init
        self.max_iter = max_iter
        self.tol = tol
        self.random_state = random_state

    # -- single EM run -------------------------------------------------
    def _run_em(self, x: np.ndarray, seed) -> dict:
        n, d = x.shape
        k = int(self.n_components)
        floor = 1e-8 * float(np.trace(np.atleast_2d(np.cov(x.T, bias=True)))) / d
        if floor <= 0 or not np.isfinite(floor):
            floor = 1e-12

        km = KMeans(n_clusters=k, random_state=seed).fit(x)
        resp = np.zeros((n, k))
        resp[np.arange(n), km.labels_] = 1.0

        loglik = -np.inf
        path = []
        shape_state = None
        converged = False
        for iteration in range(int(self.max_iter)):
            # M-step
            counts = resp.sum(axis=0)
            for j in range(k):
                if not np.isfinite(counts[j]) or counts[j] < 1e-10:
                    raise DegenerateComponentError(
                        f"component {j} collapsed (effective size {counts[j]:.3e})"
                    )
            weights = counts / n
            means = (resp.T @ x) / counts[:, None]
            scatters = np.empty((k, d, d))
            for j in range(k):
                diff = x - means[j]
                scatters[j] = (diff * resp[:, j : j + 1]).T @ diff
            covs, shape_state = _covariances_from_scatter(
                self.family, scatters, counts, n, floor, shape_state
            )
            for j in range(k):
                if not np.isfinite(covs[j]).all() or np.linalg.eigvalsh(covs[j])[0] <= 0:
                    raise DegenerateComponentError(
                        f"component {j} has a singular covariance after flooring"
                    )

            # E-step
            log_prob = np.empty((n, k))
            for j in range(k):
                log_prob[:, j] = np.log(weights[j]) + _log_gaussian(x, means[j], covs[j])
            log_norm = logsumexp(log_prob, axis=1)
            new_loglik = float(log_norm.sum())
            resp = np.exp(log_prob - log_norm[:, None])
            path.append(new_loglik)
            if new_loglik - loglik < self.tol * abs(new_loglik) and iteration > 0:
                converged = True
                loglik = new_loglik
                break
            loglik = new_loglik

        return {
            "weights": weights,
            "means": means,
            "covs": covs,
            "resp": resp,
            "loglik": loglik,
            "path": np.asarray(path),
            "converged": converged,
        }

    def fit(self, X, y=None):
        x = _as_points(X)
        n, d = x.shape
        k = int(self.n_components)
        if self.family not in FAMILIES:
            raise ValueError(f"unknown covariance family {self.family!r}; choose from {FAMILIES}")
        if n < k * (d + 1):
            raise InsufficientDataError(
                f"need at least K*(d+1) = {k * (d + 1)} points for K = {k}, d = {d}; got {n}"
            )
        check_positive_int(self.n_init, "n_init")
        seeds = _as_seed_sequence(self.random_state).spawn(int(self.n_init))

        best = None
        failures = []
        for ss in seeds:
            try:
                run = self._run_em(x, rng_from_seed(ss))
            except DegenerateComponentError as exc:
                failures.append(exc)
                continue
            if best is None or run["loglik"] > best["loglik"]:
                best = run
        if best is None:
            raise failures[-1]

        m = mixture_param_count(self.family, k, d)
        self.weights_ = best["weights"]
        self.means_ = best["means"]
        self.covariances_ = best["covs"]
        self.responsibilities_ = best["resp"]
        self.labels_ = best["resp"].argmax(axis=1)
        self.loglik_ = best["loglik"]
        self.loglik_path_ = best["path"]
        self.bic_ = 2.0 * best["loglik"] - m * np.log(n)
        self.n_parameters_ = m
        self.converged_ = best["converged"]
        self.n_iter_ = len(best["path"])
        return self

    def predict_proba(self, X):
        x = _as_points(X)
        log_prob = np.empty((len(x), len(self.weights_)))
        for j in range(len(self.weights_)):
            log_prob[:, j] = np.log(self.weights_[j]) + _log_gaussian(
                x, self.means_[j], self.covariances_[j]
            )
        return np.exp(log_prob - logsumexp(log_prob, axis=1)[:, None])

    def predict(self, X):
        return self.predict_proba(X).argmax(axis=1)


def em_fit(points, k: int, family: str, seed=None) -> tuple[MixtureModel, ClusterAssignment]:
    """Fit one (K, family) mixture; returns the model and the assignment."""
    gm = GaussianMixture(n_components=k, family=family, random_state=seed).fit(points)
    model = MixtureModel(
        family=family,
        k=int(k),
        mixing_weights=gm.weights_,
        means=gm.means_,
        covariances=gm.covariances_,
        loglik=gm.loglik_,
        bic=float(gm.bic_),
        converged=gm.converged_,
        n_iter=gm.n_iter_,
    )
    resp = gm.responsibilities_
    resp = resp / resp.sum(axis=1, keepdims=True)
    return model, ClusterAssignment(labels=resp.argmax(axis=1), responsibilities=resp)


def select_model(points, k_range, families=FAMILIES, seed=None) -> ModelSelection:
    """Scan (K, family) pairs and keep the fit with the largest BIC.

    Every pair gets its own deterministic substream of ``seed``.  Pairs that
    fail (degenerate components, too few points) are recorded in the table
    with their error message; if every pair fails, the last error is
    raised.
    """
    ks = [check_positive_int(k, "K") for k in k_range]
    fams = list(families)
    if not ks:
        raise ValueError("k_range must not be empty")
    for fam in fams:
        if fam not in FAMILIES:
            raise ValueError(f"unknown covariance family {fam!r}; choose from {FAMILIES}")
    streams = _as_seed_sequence(seed).spawn(len(ks) * len(fams))

    table = []
    best = None
    last_error = None
    for idx, (k, fam) in enumerate((k, f) for k in ks for f in fams):
        try:
            model, assignment = em_fit(points, k, fam, seed=streams[idx])
        except (DegenerateComponentError, InsufficientDataError) as exc:
            table.append({"K": k, "family": fam, "error": str(exc)})
            last_error = exc
            continue
        table.append(
            {
                "K": k,
                "family": fam,
                "bic": model.bic,
                "loglik": model.loglik,
                "converged": model.converged,
            }
        )
        if best is None or model.bic > best[0].bic:
            best = (model, assignment)
    if best is None:
        raise last_error
    return ModelSelection(best_model=best[0], best_assignment=best[1], table=table)


def write_bic_table(table, path) -> None:
    """Write a (K, family) score table as ``K,family,bic,loglik,converged``.

    Rows for failed fits leave the score fields empty and put the error
    message in the ``converged`` column.
    """
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["K", "family", "bic", "loglik", "converged"])
        for row in table:
            if "error" in row:
                writer.writerow([row["K"], row["family"], "", "", f"error: {row['error']}"])
            else:
                writer.writerow(
                    [
                        row["K"],
                        row["family"],
                        repr(float(row["bic"])),
                        repr(float(row["loglik"])),
                        str(bool(row["converged"])),
                    ]
                )


def write_assignments(point_ids, assignment: ClusterAssignment, path) -> None:
    """Write hard labels as ``point_id,label,max_responsibility``."""
    ids = list(point_ids)
    if len(ids) != len(assignment.labels):
        raise ValueError(
            f"{len(ids)} point ids for {len(assignment.labels)} assigned points"
        )
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["point_id", "label", "max_responsibility"])
        for pid, label, row in zip(ids, assignment.labels, assignment.responsibilities):
            writer.writerow([pid, int(label), repr(float(row[label]))])
