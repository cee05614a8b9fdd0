"""CART decision trees (Gini) and the bagged random forest built on them."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import _kernels


def _frozen(*arrays):
    for a in arrays:
        a.setflags(write=False)


@dataclass(frozen=True)
class DecisionTree:
    """Array-encoded binary tree. ``feature[i] == -1`` marks a leaf."""

    feature: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    value: np.ndarray  # (n_nodes, n_classes) weighted class totals
    n_classes: int

    def __post_init__(self):
        _frozen(self.feature, self.threshold, self.left, self.right, self.value)

    @property
    def n_nodes(self) -> int:
        return self.feature.size

    @property
    def depth(self) -> int:
        depth = np.zeros(self.n_nodes, dtype=np.int64)
        for i in range(self.n_nodes):
            if self.feature[i] >= 0:
                depth[self.left[i]] = depth[self.right[i]] = depth[i] + 1
        return int(depth.max())

    def apply(self, X, use_jit=None) -> np.ndarray:
        return _kernels.tree_apply(X, self.feature, self.threshold, self.left, self.right, use_jit)

    def predict(self, X, use_jit=None) -> np.ndarray:
        leaves = self.apply(X, use_jit)
        return np.argmax(self.value[leaves], axis=1).astype(np.int64)

    def to_arrays(self, prefix=""):
        return {
            prefix + "feature": self.feature,
            prefix + "threshold": self.threshold,
            prefix + "left": self.left,
            prefix + "right": self.right,
            prefix + "value": self.value,
        }

    @classmethod
    def from_arrays(cls, arrays, n_classes, prefix=""):
        return cls(
            np.array(arrays[prefix + "feature"], dtype=np.int64),
            np.array(arrays[prefix + "threshold"], dtype=np.float64),
            np.array(arrays[prefix + "left"], dtype=np.int64),
            np.array(arrays[prefix + "right"], dtype=np.int64),
            np.array(arrays[prefix + "value"], dtype=np.float64),
            int(n_classes),
        )


def build_tree(
    X,
    y,
    n_classes,
    sample_weight=None,
    max_depth=None,
    min_samples_split=2,
    max_features=None,
    rng=None,
    use_jit=None,
) -> DecisionTree:
    """Grow a CART tree depth-first.

    Rows with zero weight are dropped up front. With ``max_features`` set, each
    node draws that many candidate features from ``rng`` and falls back to the
    remaining ones only if none of the drawn features can split the node.
    """
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.int64)
    w = np.ones(y.size) if sample_weight is None else np.asarray(sample_weight, dtype=np.float64)
    keep = w > 0
    X, y, w = X[keep], y[keep], w[keep]
    n_features = X.shape[1]
    if max_features is not None and max_features < n_features and rng is None:
        raise ValueError("feature subsampling needs an rng")

    feature, threshold, left, right, value = [], [], [], [], []

    def new_node(counts):
        feature.append(-1)
        threshold.append(0.0)
        left.append(-1)
        right.append(-1)
        value.append(counts)
        return len(feature) - 1

    def class_totals(idx):
        return np.bincount(y[idx], weights=w[idx], minlength=n_classes)

    root_idx = np.arange(y.size)
    stack = [(new_node(class_totals(root_idx)), root_idx, 0)]
    all_features = np.arange(n_features)
    while stack:
        node, idx, depth = stack.pop()
        counts = value[node]
        if (
            idx.size < min_samples_split
            or np.count_nonzero(counts) <= 1
            or (max_depth is not None and depth >= max_depth)
        ):
            continue
        Xn, yn, wn = X[idx], y[idx], w[idx]
        if max_features is None or max_features >= n_features:
            f, thr, _ = _kernels.best_split(Xn, yn, wn, all_features, n_classes, use_jit)
        else:
            perm = rng.permutation(n_features)
            f, thr, _ = _kernels.best_split(Xn, yn, wn, np.sort(perm[:max_features]), n_classes, use_jit)
            if f < 0:
                f, thr, _ = _kernels.best_split(Xn, yn, wn, np.sort(perm[max_features:]), n_classes, use_jit)
        if f < 0:
            continue
        mask = Xn[:, f] <= thr
        li, ri = idx[mask], idx[~mask]
        ln = new_node(class_totals(li))
        rn = new_node(class_totals(ri))
        feature[node], threshold[node], left[node], right[node] = f, thr, ln, rn
        # right first so the left subtree gets the lower node ids
        stack.append((rn, ri, depth + 1))
        stack.append((ln, li, depth + 1))

    return DecisionTree(
        np.array(feature, dtype=np.int64),
        np.array(threshold, dtype=np.float64),
        np.array(left, dtype=np.int64),
        np.array(right, dtype=np.int64),
        np.array(value, dtype=np.float64).reshape(-1, n_classes),
        int(n_classes),
    )


def default_max_features(n_features: int) -> int:
    return int(math.ceil(math.sqrt(n_features)))


@dataclass(frozen=True)
class RandomForest:
    trees: tuple
    n_classes: int

    def tree_votes(self, X, use_jit=None) -> np.ndarray:
        """(n_trees, n_rows) matrix of member predictions."""
        return np.stack([t.predict(X, use_jit) for t in self.trees])

    def vote_counts(self, X, use_jit=None) -> np.ndarray:
        votes = self.tree_votes(X, use_jit)
        counts = np.zeros((votes.shape[1], self.n_classes), dtype=np.int64)
        for row in votes:
            counts[np.arange(votes.shape[1]), row] += 1
        return counts

    def predict(self, X, use_jit=None) -> np.ndarray:
        return np.argmax(self.vote_counts(X, use_jit), axis=1).astype(np.int64)


def build_forest(
    X,
    y,
    n_classes,
    n_trees=100,
    max_depth=None,
    max_features="sqrt",
    bootstrap=True,
    seed=0,
    use_jit=None,
) -> RandomForest:
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.int64)
    n = y.size
    if max_features == "sqrt":
        max_features = default_max_features(X.shape[1])
    trees = []
    for child in np.random.SeedSequence(seed).spawn(n_trees):
        rng = np.random.default_rng(child)
        if bootstrap:
            weight = np.bincount(rng.integers(0, n, n), minlength=n).astype(np.float64)
        else:
            weight = None
        trees.append(
            build_tree(X, y, n_classes, weight, max_depth, 2, max_features, rng, use_jit)
        )
    return RandomForest(tuple(trees), int(n_classes))
