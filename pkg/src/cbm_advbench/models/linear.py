"""One-vs-rest linear SVM trained by sub-gradient descent on the L2-regularized hinge loss."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class LinearSvm:
    W: np.ndarray  # (n_features, n_classes)
    b: np.ndarray
    classes: np.ndarray
    n_classes: int

    def decision_function(self, X):
        return np.asarray(X, dtype=np.float64) @ self.W + self.b

    def predict(self, X, use_jit=None):
        return self.classes[np.argmax(self.decision_function(X), axis=1)]


def fit_linear_svm(
    X,
    y,
    n_classes,
    alpha=1e-3,
    epochs=200,
    batch_size=32,
    learning_rate=0.01,
    lr_decay=0.5,
    decay_every=50,
    seed=0,
) -> LinearSvm:
    """Minimize ``alpha/2 |w|^2 + mean(max(0, 1 - t (x.w + b)))`` per class,
    with ``t = +1`` for the class and ``-1`` for the rest. Biases are not
    regularized. All one-vs-rest problems share the mini-batch sequence."""
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.int64)
    classes = np.array(sorted(set(y.tolist())), dtype=np.int64)
    T = np.where(y[:, None] == classes[None, :], 1.0, -1.0)
    rng = np.random.default_rng(seed)
    W = np.zeros((X.shape[1], classes.size))
    b = np.zeros(classes.size)
    n = y.size
    for epoch in range(epochs):
        lr = learning_rate * lr_decay ** (epoch // decay_every) if decay_every else learning_rate
        order = rng.permutation(n)
        for start in range(0, n, batch_size):
            idx = order[start:start + batch_size]
            Xb, Tb = X[idx], T[idx]
            active = (Tb * (Xb @ W + b)) < 1.0
            coef = -(Tb * active) / idx.size
            W = W - lr * (alpha * W + Xb.T @ coef)
            b = b - lr * coef.sum(axis=0)
    W.setflags(write=False)
    b.setflags(write=False)
    return LinearSvm(W, b, classes, int(n_classes))
