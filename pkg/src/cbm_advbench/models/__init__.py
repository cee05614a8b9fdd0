"""The classifier suite behind one train/predict interface."""
from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass
from pathlib import Path
from typing import Any

import numpy as np

from ..data import N_CLASSES, Label, LabeledDataset
from ..errors import CbmError, EmptyClass
from ..metrics import macro_f1_score
from . import boosting, gaussian, linear, mlp, neighbors, tree
from .mlp import MlpModel, mlp_input_gradient, mlp_loss

ALGORITHMS = {
    "random_forest": "Random Forest",
    "mlp": "Multilayer Perceptron",
    "decision_tree": "Decision Tree",
    "knn": "K-Nearest Neighbors",
    "qda": "Quadratic Discriminant Analysis",
    "linear_svm": "Support Vector Machine (Linear)",
    "naive_bayes": "Naive Bayes",
    "adaboost": "AdaBoost",
}

SUBSTITUTE_ARCHITECTURE = (64, 64, 32)
VICTIM_MLP_ARCHITECTURE = (32,)


@dataclass(frozen=True)
class TrainConfig:
    seed: int = 0
    mlp_epochs: int = 200
    mlp_batch_size: int = 32
    mlp_learning_rate: float = 0.1
    mlp_lr_decay: float = 0.5
    mlp_decay_every: int = 50
    mlp_hidden: tuple = VICTIM_MLP_ARCHITECTURE
    substitute_hidden: tuple = SUBSTITUTE_ARCHITECTURE
    tree_max_depth: int | None = None
    forest_trees: int = 100
    forest_max_features: int | None = tree.default_max_features(12)
    forest_bootstrap: bool = True
    knn_k: int = 5
    svm_alpha: float = 1e-3
    svm_epochs: int = 200
    svm_learning_rate: float = 0.1
    ada_rounds: int = 50
    ada_learning_rate: float = 1.0
    nb_var_floor: float = 1e-9
    qda_ridge: float = 1e-6

    def __post_init__(self):
        object.__setattr__(self, "mlp_hidden", tuple(int(h) for h in self.mlp_hidden))
        object.__setattr__(self, "substitute_hidden", tuple(int(h) for h in self.substitute_hidden))
        positive = [
            "mlp_batch_size", "mlp_learning_rate", "forest_trees", "knn_k",
            "svm_epochs", "svm_learning_rate", "ada_rounds", "ada_learning_rate",
            "nb_var_floor", "qda_ridge",
        ]
        for name in positive:
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if self.mlp_epochs < 0:
            raise ValueError("mlp_epochs must be non-negative")
        if self.tree_max_depth is not None and self.tree_max_depth < 1:
            raise ValueError("tree_max_depth must be positive")
        if any(h <= 0 for h in self.mlp_hidden + self.substitute_hidden):
            raise ValueError("layer sizes must be positive")

    def replace(self, **changes) -> "TrainConfig":
        return dataclasses.replace(self, **changes)

    def hyperparameters(self, kind: str) -> dict:
        prefix = {
            "mlp": "mlp_", "decision_tree": "tree_", "random_forest": "forest_",
            "knn": "knn_", "linear_svm": "svm_", "adaboost": "ada_",
            "naive_bayes": "nb_", "qda": "qda_",
        }[kind]
        out = {k: v for k, v in dataclasses.asdict(self).items() if k.startswith(prefix)}
        if kind == "random_forest":
            out["tree_max_depth"] = self.tree_max_depth
        return out


@dataclass(frozen=True)
class TrainedModel:
    """A fitted classifier tagged with its algorithm and training settings."""

    kind: str
    model: Any
    seed: int
    hyperparameters: dict

    @property
    def name(self) -> str:
        return ALGORITHMS[self.kind]

    def predict_batch(self, X, use_jit=None) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=np.float64))
        return self.model.predict(X, use_jit)

    def predict(self, x, use_jit=None) -> Label:
        return Label(int(self.predict_batch(np.atleast_2d(x), use_jit)[0]))


def _require_standardized(ds: LabeledDataset):
    if not ds.standardized:
        raise ValueError("classifiers expect a standardized dataset")
    if len(ds) == 0:
        raise EmptyClass("training set is empty")


def mlp_train(cfg: TrainConfig, ds: LabeledDataset, architecture=SUBSTITUTE_ARCHITECTURE) -> MlpModel:
    """Train an MLP with the given hidden-layer sizes and record its training macro-F1."""
    _require_standardized(ds)
    if len(ds.present_classes()) < 2:
        raise EmptyClass("need at least two classes to train")
    model = mlp.train_mlp(
        ds.X, ds.y,
        hidden=tuple(architecture),
        n_classes=N_CLASSES,
        epochs=cfg.mlp_epochs,
        batch_size=cfg.mlp_batch_size,
        learning_rate=cfg.mlp_learning_rate,
        lr_decay=cfg.mlp_lr_decay,
        decay_every=cfg.mlp_decay_every,
        seed=cfg.seed,
    )
    model.metadata["train_macro_f1"] = macro_f1_score(model.predict(ds.X), ds.y)
    model.metadata["seed"] = cfg.seed
    return model


def train_classifier(kind: str, cfg: TrainConfig, ds: LabeledDataset, use_jit=None) -> TrainedModel:
    if kind not in ALGORITHMS:
        raise ValueError(f"unknown algorithm {kind!r}; choose from {', '.join(ALGORITHMS)}")
    _require_standardized(ds)
    X, y = ds.X, ds.y
    if kind == "mlp":
        fitted = mlp_train(cfg, ds, cfg.mlp_hidden)
    elif kind == "decision_tree":
        fitted = tree.build_tree(X, y, N_CLASSES, max_depth=cfg.tree_max_depth, use_jit=use_jit)
    elif kind == "random_forest":
        fitted = tree.build_forest(
            X, y, N_CLASSES,
            n_trees=cfg.forest_trees,
            max_depth=cfg.tree_max_depth,
            max_features=cfg.forest_max_features,
            bootstrap=cfg.forest_bootstrap,
            seed=cfg.seed,
            use_jit=use_jit,
        )
    elif kind == "knn":
        fitted = neighbors.KNearestNeighbors(X.copy(), y.copy(), cfg.knn_k, N_CLASSES)
    elif kind == "naive_bayes":
        fitted = gaussian.fit_gaussian_nb(X, y, N_CLASSES, cfg.nb_var_floor)
    elif kind == "qda":
        fitted = gaussian.fit_qda(X, y, N_CLASSES, cfg.qda_ridge)
    elif kind == "linear_svm":
        fitted = linear.fit_linear_svm(
            X, y, N_CLASSES,
            alpha=cfg.svm_alpha,
            epochs=cfg.svm_epochs,
            batch_size=cfg.mlp_batch_size,
            learning_rate=cfg.svm_learning_rate,
            lr_decay=cfg.mlp_lr_decay,
            decay_every=cfg.mlp_decay_every,
            seed=cfg.seed,
        )
    else:
        fitted = boosting.fit_adaboost(X, y, N_CLASSES, cfg.ada_rounds, cfg.ada_learning_rate, use_jit)
    return TrainedModel(kind, fitted, cfg.seed, cfg.hyperparameters(kind))


def predict(model, x) -> Label:
    if isinstance(model, MlpModel):
        return Label(int(model.predict(np.atleast_2d(x))[0]))
    return model.predict(x)


def predict_batch(model, X) -> np.ndarray:
    if isinstance(model, MlpModel):
        return model.predict(X)
    return model.predict_batch(X)


# -- serialization ------------------------------------------------------------

FORMAT_NAME = "cbm-advbench-model"
FORMAT_VERSION = 1


def _model_arrays(kind, m) -> dict:
    if kind == "mlp":
        out = {}
        for i, (w, b) in enumerate(zip(m.weights, m.biases)):
            out[f"W{i}"], out[f"b{i}"] = w, b
        return out
    if kind == "decision_tree":
        return m.to_arrays()
    if kind == "random_forest":
        out = {}
        for i, t in enumerate(m.trees):
            out.update(t.to_arrays(f"tree{i}_"))
        return out
    if kind == "knn":
        return {"X": m.X, "y": m.y, "k": np.array(m.k)}
    if kind == "naive_bayes":
        return {"classes": m.classes, "log_prior": m.log_prior, "mean": m.mean, "var": m.var}
    if kind == "qda":
        return {"classes": m.classes, "log_prior": m.log_prior, "mean": m.mean, "chol": m.chol}
    if kind == "linear_svm":
        return {"W": m.W, "b": m.b, "classes": m.classes}
    return boosting.stump_arrays(m)


def _model_from_arrays(kind, a, n_classes):
    if kind == "mlp":
        n = sum(1 for k in a if k.startswith("W"))
        return MlpModel(tuple(a[f"W{i}"] for i in range(n)), tuple(a[f"b{i}"] for i in range(n)))
    if kind == "decision_tree":
        return tree.DecisionTree.from_arrays(a, n_classes)
    if kind == "random_forest":
        n = sum(1 for k in a if k.endswith("_feature"))
        return tree.RandomForest(
            tuple(tree.DecisionTree.from_arrays(a, n_classes, f"tree{i}_") for i in range(n)), n_classes
        )
    if kind == "knn":
        return neighbors.KNearestNeighbors(a["X"], a["y"].astype(np.int64), int(a["k"]), n_classes)
    if kind == "naive_bayes":
        return gaussian.GaussianNaiveBayes(a["classes"].astype(np.int64), a["log_prior"], a["mean"], a["var"], n_classes)
    if kind == "qda":
        return gaussian.QuadraticDiscriminant(a["classes"].astype(np.int64), a["log_prior"], a["mean"], a["chol"], n_classes)
    if kind == "linear_svm":
        return linear.LinearSvm(a["W"], a["b"], a["classes"].astype(np.int64), n_classes)
    if kind == "adaboost":
        return boosting.stumps_from_arrays(a, n_classes)
    raise CbmError(f"unknown algorithm tag {kind!r}")


def _encode(arr):
    arr = np.asarray(arr)
    kind = "int64" if arr.dtype.kind in "iub" else "float64"
    return {"dtype": kind, "shape": list(arr.shape), "data": arr.astype(kind).ravel().tolist()}


def _decode(obj):
    return np.array(obj["data"], dtype=obj["dtype"]).reshape(obj["shape"])


def dumps_model(model) -> str:
    """Serialize a TrainedModel (or bare substitute MlpModel) to versioned JSON text.

    Floats are written with ``repr`` precision, so loading is exact.
    """
    if isinstance(model, MlpModel):
        model = TrainedModel("mlp", model, int(model.metadata.get("seed", 0)), {})
    doc = {
        "format": FORMAT_NAME,
        "version": FORMAT_VERSION,
        "algorithm": model.kind,
        "seed": model.seed,
        "n_classes": N_CLASSES,
        "hyperparameters": model.hyperparameters,
        "arrays": {k: _encode(v) for k, v in _model_arrays(model.kind, model.model).items()},
    }
    return json.dumps(doc, sort_keys=True)


def loads_model(text: str) -> TrainedModel:
    doc = json.loads(text)
    if doc.get("format") != FORMAT_NAME:
        raise CbmError("not a model file")
    if doc.get("version") != FORMAT_VERSION:
        raise CbmError(f"unsupported model format version {doc.get('version')!r}")
    arrays = {k: _decode(v) for k, v in doc["arrays"].items()}
    hp = doc["hyperparameters"]
    m = _model_from_arrays(doc["algorithm"], arrays, int(doc["n_classes"]))
    return TrainedModel(doc["algorithm"], m, int(doc["seed"]), hp)


def save_model(model, path) -> None:
    Path(path).write_text(dumps_model(model) + "\n")


def load_model(path) -> TrainedModel:
    return loads_model(Path(path).read_text())


__all__ = [
    "ALGORITHMS", "MlpModel", "TrainConfig", "TrainedModel", "mlp_input_gradient",
    "mlp_loss", "mlp_train", "predict", "predict_batch", "train_classifier",
    "save_model", "load_model", "dumps_model", "loads_model",
]
