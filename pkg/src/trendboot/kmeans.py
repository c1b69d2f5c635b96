"""K-means clustering baseline: k-means++ seeding plus Lloyd iterations."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from sklearn.base import BaseEstimator, ClusterMixin

from .validation import rng_from_seed

__all__ = ["ClusterAssignment", "KMeans", "kmeans"]


@dataclass
class ClusterAssignment:
    """Hard labels together with per-point membership probabilities."""

    labels: np.ndarray
    responsibilities: np.ndarray = field(repr=False)

    def __post_init__(self):
        self.labels = np.asarray(self.labels, dtype=int)
        self.responsibilities = np.asarray(self.responsibilities, dtype=float)
        if self.responsibilities.ndim != 2 or len(self.responsibilities) != len(self.labels):
            raise ValueError("responsibilities must be (n_points, K)")
        rows = self.responsibilities.sum(axis=1)
        if np.abs(rows - 1.0).max(initial=0.0) > 1e-10:
            raise ValueError("responsibility rows must sum to 1")
        if not np.array_equal(self.labels, self.responsibilities.argmax(axis=1)):
            raise ValueError("labels must be the argmax of the responsibilities")


def _as_points(points) -> np.ndarray:
    x = np.asarray(points, dtype=float)
    if x.ndim == 1:
        x = x[:, None]
    if x.ndim != 2 or x.size == 0:
        raise ValueError("points must form a non-empty (n, d) array")
    if not np.isfinite(x).all():
        raise ValueError("points must be finite")
    return x


def _plus_plus_centers(x: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    """k-means++ seeding: spread initial centers by squared-distance sampling."""
    n = len(x)
    centers = np.empty((k, x.shape[1]))
    centers[0] = x[rng.integers(n)]
    closest = ((x - centers[0]) ** 2).sum(axis=1)
    for j in range(1, k):
        total = closest.sum()
        if total <= 0:
            centers[j] = x[rng.integers(n)]
            continue
        probs = closest / total
        centers[j] = x[rng.choice(n, p=probs)]
        closest = np.minimum(closest, ((x - centers[j]) ** 2).sum(axis=1))
    return centers


class KMeans(BaseEstimator, ClusterMixin):
    """Lloyd's algorithm with k-means++ seeding.

    Runs to an assignment fixed point or ``max_iter`` sweeps.  A cluster
    that empties is re-seeded from the point farthest from its current
    center.  ``inertia_path_`` records the within-cluster sum of squares
    after every sweep (non-increasing by construction).
    """

    def __init__(self, n_clusters: int = 8, max_iter: int = 300, random_state=None):
        self.n_clusters = n_clusters
        self.max_iter = max_iter
        self.random_state = random_state

    def fit(self, X, y=None):
        x = _as_points(X)
        k = int(self.n_clusters)
        if k < 1:
            raise ValueError(f"n_clusters must be positive, got {k}")
        n_distinct = len(np.unique(x, axis=0))
        if k > n_distinct:
            raise ValueError(f"n_clusters = {k} exceeds the {n_distinct} distinct points")
        rng = rng_from_seed(self.random_state)

        centers = _plus_plus_centers(x, k, rng)
        labels = np.full(len(x), -1)
        path = []
        for _ in range(int(self.max_iter)):
            dist2 = ((x[:, None, :] - centers[None, :, :]) ** 2).sum(axis=2)
            new_labels = dist2.argmin(axis=1)
            path.append(float(dist2[np.arange(len(x)), new_labels].sum()))
            if np.array_equal(new_labels, labels):
                break
            labels = new_labels
            for j in range(k):
                member = labels == j
                if member.any():
                    centers[j] = x[member].mean(axis=0)
                else:
                    own = ((x - centers[labels]) ** 2).sum(axis=1)
                    centers[j] = x[own.argmax()]

        self.cluster_centers_ = centers
        self.labels_ = labels
        self.inertia_path_ = np.asarray(path)
        self.inertia_ = path[-1]
        self.n_iter_ = len(path)
        return self

    def predict(self, X):
        x = _as_points(X)
        dist2 = ((x[:, None, :] - self.cluster_centers_[None, :, :]) ** 2).sum(axis=2)
        return dist2.argmin(axis=1)


def kmeans(points, k: int, seed=None) -> ClusterAssignment:
    """Cluster points into ``k`` groups; responsibilities are one-hot."""
    x = _as_points(points)
    model = KMeans(n_clusters=k, random_state=seed).fit(x)
    resp = np.zeros((len(x), int(k)))
    resp[np.arange(len(x)), model.labels_] = 1.0
    return ClusterAssignment(labels=model.labels_, responsibilities=resp)
