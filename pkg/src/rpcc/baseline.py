"""Lloyd's K-means with k-means++ seeding, the comparison baseline."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .dataset import Partition, as_data_matrix
from .exceptions import ParameterError
from .projection import ProjectionMatrix


@dataclass(frozen=True)
class KMeansConfig:
    K: int
    max_iter: int = 10000
    replicates: int = 30
    seed: int = 0

    def __post_init__(self):
        if self.K < 1:
            raise ParameterError("K must be at least 1")
        if self.replicates < 1:
            raise ParameterError("replicates must be at least 1")
        if self.max_iter < 1:
            raise ParameterError("max_iter must be at least 1")


def _sqdist(X, sq, C):
    d2 = sq[:, None] - 2.0 * X @ C.T + np.einsum("ij,ij->i", C, C)[None, :]
    return np.maximum(d2, 0.0)


def kmeans_plusplus(X, K, rng) -> np.ndarray:
    """D^2 seeding: each new centre drawn with probability proportional to squared distance."""
    n = X.shape[0]
    centers = np.empty((K, X.shape[1]))
    centers[0] = X[rng.integers(n)]
    closest = np.sum((X - centers[0]) ** 2, axis=1)
    for k in range(1, K):
        total = closest.sum()
        if total > 0:
            i = rng.choice(n, p=closest / total)
        else:
            i = rng.integers(n)
        centers[k] = X[i]
        closest = np.minimum(closest, np.sum((X - centers[k]) ** 2, axis=1))
    return centers


def _repair_empty(X, labels, d2, K):
    """Move the farthest points of multi-member clusters into empty clusters."""
    counts = np.bincount(labels, minlength=K)
    own = d2[np.arange(X.shape[0]), labels]
    for k in np.flatnonzero(counts == 0):
        movable = counts[labels] > 1
        cand = np.where(movable, own, -np.inf)
        i = int(np.argmax(cand))
        counts[labels[i]] -= 1
        labels[i] = k
        counts[k] += 1
        own[i] = 0.0
    return labels


def lloyd(X, centers, max_iter: int = 10000):
    """Run Lloyd iterations from ``centers``.

    Returns ``(labels, centers, history)`` where ``history`` holds the
    within-cluster sum of squares after every assignment step. Stops when
    assignments no longer change.
    """
    X = np.asarray(X, dtype=float)
    K = centers.shape[0]
    sq = np.einsum("ij,ij->i", X, X)
    labels = None
    history = []
    for _ in range(max_iter):
        d2 = _sqdist(X, sq, centers)
        new = np.argmin(d2, axis=1)
        new = _repair_empty(X, new, d2, K)
        if labels is not None and np.array_equal(new, labels):
            break
        labels = new
        counts = np.bincount(labels, minlength=K)
        centers = np.zeros_like(centers)
        np.add.at(centers, labels, X)
        centers /= counts[:, None]
        history.append(float(np.sum((X - centers[labels]) ** 2)))
    return labels, centers, history


def kmeans(data, cfg: KMeansConfig):
    """Best of ``cfg.replicates`` Lloyd runs; returns ``(partition, inertia)``."""
    X = as_data_matrix(data)
    if cfg.K > X.shape[0]:
        raise ParameterError(f"K={cfg.K} exceeds the number of points {X.shape[0]}")
    best_labels, best_inertia = None, np.inf
    for child in np.random.SeedSequence(cfg.seed).spawn(cfg.replicates):
        rng = np.random.default_rng(child)
        labels, _, history = lloyd(X, kmeans_plusplus(X, cfg.K, rng), cfg.max_iter)
        inertia = history[-1]
        if inertia < best_inertia:
            best_labels, best_inertia = labels, inertia
    return Partition.from_labels(best_labels), float(best_inertia)


def rp_kmeans(data, pi: ProjectionMatrix, cfg: KMeansConfig):
    """K-means on the embedded points; the partition indexes the original rows."""
    X = as_data_matrix(data)
    if X.shape[1] != pi.d:
        raise ParameterError(f"data dimension {X.shape[1]} does not match projection {pi.d}")
    return kmeans(pi.apply(X), cfg)
