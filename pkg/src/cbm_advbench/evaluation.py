"""Cross-validation, the transfer-attack sweep and adversarial training."""
from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .attack import AttackConfig, craft_attack_set, distance_stats, fgsm_perturb
from .data import N_CLASSES, LabeledDataset, kfold_partition
from .metrics import confusion_matrix, macro_f1, weighted_f1
from .models import ALGORITHMS, MlpModel, TrainConfig, predict_batch, train_classifier

__all__ = [
    "CrossValidation", "DefenseConfig", "SweepPoint", "ModelReport", "RobustnessReport",
    "cross_validate", "score", "transfer_evaluate", "perturb_training_set",
    "adversarial_training",
]


@dataclass(frozen=True)
class CrossValidation:
    mean_f1: float
    fold_f1: tuple
    folds: tuple  # (train_idx, val_idx) pairs
    models: tuple = field(default=(), repr=False, compare=False)


def cross_validate(kind, cfg: TrainConfig, ds: LabeledDataset, k: int = 5, keep_models=False,
                   trainer=None) -> CrossValidation:
    """k-fold CV of one algorithm; folds are drawn with ``cfg.seed``.

    ``trainer(cfg, ds)`` overrides ``train_classifier`` for custom victims.
    """
    folds = kfold_partition(len(ds), k, cfg.seed)
    scores, models = [], []
    for train_idx, val_idx in folds:
        train = ds.subset(train_idx)
        m = trainer(cfg, train) if trainer else train_classifier(kind, cfg, train)
        pred = predict_batch(m, ds.X[val_idx])
        scores.append(macro_f1(confusion_matrix(pred, ds.y[val_idx])))
        if keep_models:
            models.append(m)
    return CrossValidation(float(np.mean(scores)), tuple(scores), tuple(folds), tuple(models))


@dataclass(frozen=True)
class SweepPoint:
    epsilon: float
    f1: float
    weighted_f1: float
    success_rate: float
    confusion: np.ndarray

    def to_dict(self):
        return {
            "epsilon": self.epsilon,
            "f1": self.f1,
            "weighted_f1": self.weighted_f1,
            "success_rate": self.success_rate,
            "confusion": self.confusion.tolist(),
        }


def score(model, X, y, epsilon=0.0) -> SweepPoint:
    pred = predict_batch(model, X)
    cm = confusion_matrix(pred, y, N_CLASSES)
    return SweepPoint(float(epsilon), macro_f1(cm), weighted_f1(cm), float(np.mean(pred != y)), cm)


@dataclass(frozen=True)
class ModelReport:
    algorithm: str
    clean: SweepPoint
    sweep: tuple

    @property
    def clean_f1(self) -> float:
        return self.clean.f1

    def f1_at(self, epsilon) -> float:
        for p in self.sweep:
            if p.epsilon == epsilon:
                return p.f1
        raise KeyError(epsilon)

    def to_dict(self):
        return {
            "algorithm": self.algorithm,
            "clean_f1": self.clean.f1,
            "clean_weighted_f1": self.clean.weighted_f1,
            "clean_confusion": self.clean.confusion.tolist(),
            "sweep": [p.to_dict() for p in self.sweep],
        }


@dataclass(frozen=True)
class RobustnessReport:
    """Per-victim clean and per-epsilon scores on one attack pool."""

    epsilons: tuple
    models: tuple
    substitute: ModelReport
    distances: dict
    label: str = "undefended"

    def model(self, algorithm) -> ModelReport:
        for m in self.models:
            if m.algorithm == algorithm:
                return m
        raise KeyError(algorithm)

    def to_dict(self):
        return {
            "label": self.label,
            "epsilons": list(self.epsilons),
            "models": [m.to_dict() for m in self.models],
            "substitute": self.substitute.to_dict(),
            "distances": {repr(e): d for e, d in self.distances.items()},
        }

    def csv_rows(self):
        """``(algorithm, epsilon, f1, success_rate)``; non-default reports prefix the algorithm."""
        prefix = "" if self.label == "undefended" else f"{self.label}:"
        for m in self.models + (self.substitute,):
            name = prefix + m.algorithm
            yield (name, 0.0, m.clean.f1, m.clean.success_rate)
            for p in m.sweep:
                yield (name, p.epsilon, p.f1, p.success_rate)


def transfer_evaluate(victims, substitute: MlpModel, pool: LabeledDataset, sweep: AttackConfig,
                      label="undefended") -> RobustnessReport:
    """Craft one FGSM set per epsilon on ``substitute`` and score every victim on it.

    ``victims`` maps a name to a fitted model (or is a sequence of TrainedModel).
    The substitute is scored on its own samples as a white-box reference.
    """
    if not isinstance(victims, dict):
        victims = {v.kind: v for v in victims}
    clean = {name: score(m, pool.X, pool.y) for name, m in victims.items()}
    sub_clean = score(substitute, pool.X, pool.y)
    points = {name: [] for name in victims}
    sub_points, distances = [], {}
    for eps in sweep.epsilon_sweep:
        adv = craft_attack_set(substitute, pool, eps)
        distances[eps] = distance_stats(adv)
        for name, m in victims.items():
            points[name].append(score(m, adv.perturbed, adv.labels, eps))
        sub_points.append(score(substitute, adv.perturbed, adv.labels, eps))
    models = tuple(ModelReport(name, clean[name], tuple(points[name])) for name in victims)
    return RobustnessReport(
        tuple(sweep.epsilon_sweep),
        models,
        ModelReport("substitute", sub_clean, tuple(sub_points)),
        distances,
        label,
    )


@dataclass(frozen=True)
class DefenseConfig:
    perturbed_fraction: float = 0.20
    defense_epsilon: float = 0.03
    seed: int = 0

    def __post_init__(self):
        if not 0 <= self.perturbed_fraction < 1:
            raise ValueError("perturbed_fraction must be in [0, 1)")
        if self.defense_epsilon < 0:
            raise ValueError("defense_epsilon must be non-negative")


def _stratified_count(y, total, fraction):
    """Per-class quotas summing to ``total``; largest remainders, then lowest class, get the extras."""
    counts = np.bincount(y, minlength=N_CLASSES)
    ideal = counts * fraction
    quota = np.floor(ideal).astype(np.int64)
    extra = total - int(quota.sum())
    order = sorted(range(N_CLASSES), key=lambda c: (-(ideal[c] - quota[c]), c))
    for c in order:
        if extra <= 0:
            break
        if quota[c] < counts[c]:
            quota[c] += 1
            extra -= 1
    return quota


def perturb_training_set(ds: LabeledDataset, defense: DefenseConfig, substitute: MlpModel):
    """Replace a seeded stratified ``floor(fraction * n)`` rows with their FGSM
    perturbations (labels kept). Returns the new dataset and the replaced row indices."""
    n = len(ds)
    total = int(np.floor(defense.perturbed_fraction * n))
    if total == 0:
        return ds, np.zeros(0, dtype=np.int64)
    quota = _stratified_count(ds.y, total, defense.perturbed_fraction)
    rng = np.random.default_rng(defense.seed)
    chosen = []
    for c in range(N_CLASSES):
        idx = np.flatnonzero(ds.y == c)
        if quota[c]:
            chosen.append(rng.choice(idx, size=quota[c], replace=False))
    chosen = np.sort(np.concatenate(chosen)).astype(np.int64)
    X = ds.X.copy()
    X[chosen] = fgsm_perturb(substitute, ds.X[chosen], ds.y[chosen], defense.defense_epsilon)
    return ds.with_features(X, source=f"{ds.source}+fgsm{defense.defense_epsilon}"), chosen


def adversarial_training(kind, cfg: TrainConfig, ds: LabeledDataset, defense: DefenseConfig,
                         substitute: MlpModel):
    if kind not in ALGORITHMS:
        raise ValueError(f"unknown algorithm {kind!r}")
    modified, _ = perturb_training_set(ds, defense, substitute)
    return train_classifier(kind, cfg, modified)


# -- report files ---------------------------------------------------------------

def _round_floats(obj):
    if isinstance(obj, float):
        return float(repr(obj))
    if isinstance(obj, dict):
        return {k: _round_floats(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_round_floats(v) for v in obj]
    return obj


def report_document(reports, cv_table=None, excluded=None, meta=None) -> dict:
    """JSON-ready document; ``models[]`` comes from the first (undefended) report."""
    reports = list(reports)
    doc = {"meta": meta or {}}
    if cv_table is not None:
        doc["cross_validation"] = cv_table
    doc["excluded"] = excluded or []
    doc.update(reports[0].to_dict())
    if len(reports) > 1:
        doc["defended"] = [r.to_dict() for r in reports[1:]]
    return _round_floats(doc)


def write_report_json(path, reports, cv_table=None, excluded=None, meta=None) -> None:
    doc = report_document(reports, cv_table, excluded, meta)
    Path(path).write_text(json.dumps(doc, indent=2, sort_keys=False) + "\n")


def write_report_csv(path, reports) -> None:
    with Path(path).open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["algorithm", "epsilon", "f1", "success_rate"])
        for r in reports:
            for name, eps, f1, rate in r.csv_rows():
                w.writerow([name, repr(float(eps)), repr(float(f1)), repr(float(rate))])
