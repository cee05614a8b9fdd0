"""Fully connected ReLU network with a softmax output, trained by mini-batch SGD
on cross-entropy. Also provides the exact input gradient used by FGSM."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..errors import NonFiniteLoss

PROB_FLOOR = 1e-12


@dataclass(frozen=True)
class MlpModel:
    """Weights are stored as ``(fan_in, fan_out)`` matrices: ``z = a @ W + b``."""

    weights: tuple
    biases: tuple
    metadata: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        ws = tuple(np.array(w, dtype=np.float64) for w in self.weights)
        bs = tuple(np.array(b, dtype=np.float64).ravel() for b in self.biases)
        if len(ws) != len(bs) or not ws:
            raise ValueError("need one bias vector per weight matrix")
        for i, (w, b) in enumerate(zip(ws, bs)):
            if w.ndim != 2 or w.shape[1] != b.size:
                raise ValueError(f"layer {i}: weight {w.shape} does not match bias {b.shape}")
            if i and ws[i - 1].shape[1] != w.shape[0]:
                raise ValueError(f"layer {i}: input size {w.shape[0]} != previous output {ws[i - 1].shape[1]}")
            w.setflags(write=False)
            b.setflags(write=False)
        object.__setattr__(self, "weights", ws)
        object.__setattr__(self, "biases", bs)

    @property
    def layer_sizes(self) -> tuple:
        return (self.weights[0].shape[0],) + tuple(w.shape[1] for w in self.weights)

    @property
    def n_classes(self) -> int:
        return self.weights[-1].shape[1]

    def fingerprint(self) -> str:
        import hashlib

        h = hashlib.sha256()
        for w, b in zip(self.weights, self.biases):
            h.update(np.ascontiguousarray(w).tobytes())
            h.update(np.ascontiguousarray(b).tobytes())
        return h.hexdigest()[:16]

    def _forward(self, X):
        return _forward(self.weights, self.biases, X)

    def logits(self, X):
        return self._forward(X)[-1]

    def predict_proba(self, X):
        return softmax(self.logits(X))

    def predict(self, X, use_jit=None):
        return np.argmax(self.logits(X), axis=1).astype(np.int64)

    def loss(self, X, y) -> np.ndarray:
        """Per-row cross-entropy ``-log p_y`` with p floored at 1e-12."""
        y = np.atleast_1d(np.asarray(y, dtype=np.int64))
        logp = log_softmax(self.logits(X))
        return -np.maximum(logp[np.arange(y.size), y], np.log(PROB_FLOOR))

    def input_gradient(self, X, y) -> np.ndarray:
        """Row-wise gradient of the cross-entropy loss w.r.t. the input features.

        The probability floor is ignored here; it only bounds the reported
        loss value.
        """
        y = np.atleast_1d(np.asarray(y, dtype=np.int64))
        acts = self._forward(X)
        return _backward(self.weights, acts, y)[2]


def _forward(weights, biases, X):
    """Activations of every layer; the last entry is the logits."""
    acts = [np.atleast_2d(np.asarray(X, dtype=np.float64))]
    last = len(weights) - 1
    for i, (w, b) in enumerate(zip(weights, biases)):
        z = acts[-1] @ w + b
        acts.append(z if i == last else np.maximum(z, 0.0))
    return acts


def _backward(weights, acts, y):
    """Gradients of the summed loss w.r.t. every parameter and the input."""
    delta = softmax(acts[-1])
    delta[np.arange(y.size), y] -= 1.0
    grads_w = [None] * len(weights)
    grads_b = [None] * len(weights)
    for i in range(len(weights) - 1, -1, -1):
        grads_w[i] = acts[i].T @ delta
        grads_b[i] = delta.sum(axis=0)
        delta = delta @ weights[i].T
        if i > 0:
            delta = delta * (acts[i] > 0.0)
    return grads_w, grads_b, delta


def softmax(z):
    z = np.asarray(z, dtype=np.float64)
    e = np.exp(z - z.max(axis=-1, keepdims=True))
    return e / e.sum(axis=-1, keepdims=True)


def log_softmax(z):
    z = np.asarray(z, dtype=np.float64)
    shifted = z - z.max(axis=-1, keepdims=True)
    return shifted - np.log(np.exp(shifted).sum(axis=-1, keepdims=True))


def init_mlp(layer_sizes, rng) -> MlpModel:
    """Zero biases; weights ~ N(0, 1/fan_in)."""
    weights, biases = [], []
    for fan_in, fan_out in zip(layer_sizes[:-1], layer_sizes[1:]):
        weights.append(rng.standard_normal((fan_in, fan_out)) / np.sqrt(fan_in))
        biases.append(np.zeros(fan_out))
    return MlpModel(tuple(weights), tuple(biases))


def mlp_loss(model: MlpModel, x, y) -> float:
    return float(model.loss(np.atleast_2d(x), [int(y)])[0])


def mlp_input_gradient(model: MlpModel, x, y) -> np.ndarray:
    return model.input_gradient(np.atleast_2d(x), [int(y)])[0]


def train_mlp(
    X,
    y,
    hidden=(64, 64, 32),
    n_classes=4,
    epochs=200,
    batch_size=32,
    learning_rate=0.01,
    lr_decay=0.5,
    decay_every=50,
    seed=0,
) -> MlpModel:
    """Mini-batch SGD on mean cross-entropy.

    The step size is multiplied by ``lr_decay`` every ``decay_every`` epochs.
    Raises NonFiniteLoss when an epoch's loss stops being finite.
    """
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.int64)
    rng = np.random.default_rng(seed)
    model = init_mlp((X.shape[1],) + tuple(hidden) + (n_classes,), rng)
    weights = [w.copy() for w in model.weights]
    biases = [b.copy() for b in model.biases]
    n = y.size
    history = []
    for epoch in range(epochs):
        lr = learning_rate * lr_decay ** (epoch // decay_every) if decay_every else learning_rate
        order = rng.permutation(n)
        total = 0.0
        for start in range(0, n, batch_size):
            idx = order[start:start + batch_size]
            acts = _forward(weights, biases, X[idx])
            logp = log_softmax(acts[-1])
            total += -logp[np.arange(idx.size), y[idx]].sum()
            gw, gb, _ = _backward(weights, acts, y[idx])
            scale = lr / idx.size
            for i in range(len(weights)):
                weights[i] = weights[i] - scale * gw[i]
                biases[i] = biases[i] - scale * gb[i]
        mean_loss = total / n
        if not np.isfinite(mean_loss) or not all(np.all(np.isfinite(w)) for w in weights):
            raise NonFiniteLoss(epoch)
        history.append(mean_loss)
    meta = {"epochs": epochs, "final_loss": history[-1] if history else None}
    return MlpModel(tuple(weights), tuple(biases), meta)
