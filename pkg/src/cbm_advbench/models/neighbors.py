"""Exact k-nearest-neighbour classifier."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _kernels


def vote(neighbor_labels, neighbor_dist, n_classes) -> np.ndarray:
    """Majority vote; ties go to the class with the smallest mean distance,
    then to the lowest class index."""
    nq, k = neighbor_labels.shape
    counts = np.zeros((nq, n_classes), dtype=np.int64)
    dist_sum = np.zeros((nq, n_classes))
    rows = np.arange(nq)
    for t in range(k):
        counts[rows, neighbor_labels[:, t]] += 1
        dist_sum[rows, neighbor_labels[:, t]] += neighbor_dist[:, t]
    best = counts.max(axis=1, keepdims=True)
    tied = counts == best
    with np.errstate(invalid="ignore", divide="ignore"):
        mean_dist = np.where(tied, dist_sum / np.maximum(counts, 1), np.inf)
    # argmin keeps the first (lowest) class among equal mean distances
    return np.argmin(mean_dist, axis=1).astype(np.int64)


@dataclass(frozen=True)
class KNearestNeighbors:
    X: np.ndarray
    y: np.ndarray
    k: int
    n_classes: int

    def __post_init__(self):
        self.X.setflags(write=False)
        self.y.setflags(write=False)

    def kneighbors(self, Q, use_jit=None):
        k = min(self.k, self.y.size)
        idx, sq = _kernels.knn_query(Q, self.X, k, use_jit)
        return idx, np.sqrt(sq)

    def predict(self, Q, use_jit=None) -> np.ndarray:
        idx, dist = self.kneighbors(Q, use_jit)
        return vote(self.y[idx], dist, self.n_classes)
