"""SAMME AdaBoost over depth-1 Gini trees."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .tree import DecisionTree, build_tree


@dataclass(frozen=True)
class AdaBoost:
    stumps: tuple
    alphas: np.ndarray
    n_classes: int

    def decision_function(self, X, use_jit=None):
        X = np.asarray(X, dtype=np.float64)
        score = np.zeros((X.shape[0], self.n_classes))
        rows = np.arange(X.shape[0])
        for stump, alpha in zip(self.stumps, self.alphas):
            score[rows, stump.predict(X, use_jit)] += alpha
        return score

    def predict(self, X, use_jit=None):
        return np.argmax(self.decision_function(X, use_jit), axis=1).astype(np.int64)


def fit_adaboost(X, y, n_classes, rounds=50, learning_rate=1.0, use_jit=None) -> AdaBoost:
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.int64)
    k = np.unique(y).size
    w = np.full(y.size, 1.0 / y.size)
    stumps, alphas = [], []
    for _ in range(rounds):
        stump = build_tree(X, y, n_classes, sample_weight=w, max_depth=1, use_jit=use_jit)
        miss = stump.predict(X, use_jit) != y
        err = float(np.sum(w[miss]) / np.sum(w))
        if err <= 0.0:
            # perfect learner: it alone decides
            stumps, alphas = [stump], [1.0]
            break
        if k < 2 or err >= 1.0 - 1.0 / k:
            if not stumps:
                stumps, alphas = [stump], [1.0]
            break
        alpha = learning_rate * (np.log((1.0 - err) / err) + np.log(k - 1.0))
        stumps.append(stump)
        alphas.append(alpha)
        w = w * np.exp(alpha * miss)
        w = w / w.sum()
    a = np.array(alphas, dtype=np.float64)
    a.setflags(write=False)
    return AdaBoost(tuple(stumps), a, int(n_classes))


def stump_arrays(model: AdaBoost):
    out = {"alphas": model.alphas}
    for i, s in enumerate(model.stumps):
        out.update(s.to_arrays(f"stump{i}_"))
    return out


def stumps_from_arrays(arrays, n_classes):
    alphas = np.array(arrays["alphas"], dtype=np.float64)
    stumps = tuple(DecisionTree.from_arrays(arrays, n_classes, f"stump{i}_") for i in range(alphas.size))
    return AdaBoost(stumps, alphas, int(n_classes))
