"""Fast gradient sign evasion samples crafted on the substitute network, plus
the perturbation-size metrics used to report them."""
from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .data import Label, LabeledDataset
from .errors import DimensionMismatch, EmptyPool
from .features import FEATURE_NAMES
from .models import MlpModel, predict_batch

DEFAULT_SWEEP = (0.01, 0.02, 0.03, 0.04, 0.05)
# gradient components at or below this magnitude count as zero (sign 0)
GRAD_ZERO_TOL = 1e-12
L0_TOL = 1e-12


@dataclass(frozen=True)
class AttackConfig:
    epsilon: float = 0.03
    epsilon_sweep: tuple = DEFAULT_SWEEP

    def __post_init__(self):
        sweep = tuple(float(e) for e in self.epsilon_sweep)
        object.__setattr__(self, "epsilon_sweep", sweep)
        for e in (self.epsilon,) + sweep:
            if not np.isfinite(e) or e < 0:
                raise ValueError(f"epsilon must be finite and non-negative, got {e}")
        if any(b <= a for a, b in zip(sweep, sweep[1:])):
            raise ValueError("epsilon sweep must be strictly increasing")


@dataclass(frozen=True)
class AdversarialSample:
    original: np.ndarray
    perturbed: np.ndarray
    true_label: Label
    epsilon: float


@dataclass(frozen=True)
class AdversarialSet:
    """Row-aligned originals and their perturbations at a single epsilon."""

    original: np.ndarray
    perturbed: np.ndarray
    labels: np.ndarray
    epsilon: float
    substitute: str = ""

    def __post_init__(self):
        if self.labels.size == 0:
            raise EmptyPool("adversarial set is empty")
        for a in (self.original, self.perturbed, self.labels):
            a.setflags(write=False)

    def __len__(self):
        return self.labels.size

    def __getitem__(self, i) -> AdversarialSample:
        return AdversarialSample(self.original[i], self.perturbed[i], Label(int(self.labels[i])), self.epsilon)

    @property
    def samples(self) -> list[AdversarialSample]:
        return [self[i] for i in range(len(self))]

    def as_dataset(self, source="adversarial") -> LabeledDataset:
        return LabeledDataset(self.perturbed, self.labels, standardized=True, source=source)


def gradient_sign(g) -> np.ndarray:
    g = np.asarray(g, dtype=np.float64)
    return np.where(np.abs(g) > GRAD_ZERO_TOL, np.sign(g), 0.0)


def fgsm_perturb(substitute: MlpModel, X, y, epsilon: float) -> np.ndarray:
    """``X + epsilon * sign(grad_x loss)`` row by row; one step, no clipping."""
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    if epsilon == 0:
        return X.copy()
    g = substitute.input_gradient(X, np.atleast_1d(y))
    return X + epsilon * gradient_sign(g)


def fgsm_craft(substitute: MlpModel, x, y, epsilon: float) -> AdversarialSample:
    x = np.asarray(x, dtype=np.float64).ravel()
    label = Label.parse(y) if not isinstance(y, (int, np.integer)) else Label(int(y))
    x_star = fgsm_perturb(substitute, x[None, :], [int(label)], epsilon)[0]
    return AdversarialSample(x, x_star, label, float(epsilon))


def craft_attack_set(substitute: MlpModel, pool: LabeledDataset, epsilon: float) -> AdversarialSet:
    if len(pool) == 0:
        raise EmptyPool("attack pool is empty")
    perturbed = fgsm_perturb(substitute, pool.X, pool.y, epsilon)
    return AdversarialSet(pool.X.copy(), perturbed, pool.y.copy(), float(epsilon), substitute.fingerprint())


def lp_distance(x, x_star, norm: str = "Linf") -> float:
    x = np.asarray(x, dtype=np.float64).ravel()
    x_star = np.asarray(x_star, dtype=np.float64).ravel()
    if x.shape != x_star.shape:
        raise DimensionMismatch(f"{x.size} vs {x_star.size} coordinates")
    diff = np.abs(x_star - x)
    key = norm.lower()
    if key == "l0":
        return float(np.count_nonzero(diff > L0_TOL))
    if key == "l2":
        return float(np.sqrt(np.sum(diff * diff)))
    if key in ("linf", "l_inf", "inf"):
        return float(diff.max()) if diff.size else 0.0
    raise ValueError(f"unknown norm {norm!r}; use L0, L2 or Linf")


def distance_stats(adv: AdversarialSet) -> dict:
    diff = np.abs(adv.perturbed - adv.original)
    l0 = np.count_nonzero(diff > L0_TOL, axis=1)
    l2 = np.sqrt(np.sum(diff * diff, axis=1))
    linf = diff.max(axis=1)
    return {
        "mean_l0": float(l0.mean()),
        "mean_l2": float(l2.mean()),
        "max_linf": float(linf.max()),
        "mean_linf": float(linf.mean()),
    }


def attack_success(victim, sample: AdversarialSample) -> bool:
    """Untargeted criterion: the victim's label for the perturbed point is wrong."""
    pred = predict_batch(victim, np.atleast_2d(sample.perturbed))[0]
    return bool(pred != int(sample.true_label))


def success_rate(victim, adv: AdversarialSet) -> float:
    return float(np.mean(predict_batch(victim, adv.perturbed) != adv.labels))


def write_adversarial_csv(path, sets) -> None:
    if isinstance(sets, AdversarialSet):
        sets = [sets]
    header = (
        [f"original_{n}" for n in FEATURE_NAMES]
        + [f"perturbed_{n}" for n in FEATURE_NAMES]
        + ["label", "epsilon"]
    )
    with Path(path).open("w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for adv in sets:
            for o, p, lab in zip(adv.original, adv.perturbed, adv.labels):
                writer.writerow(
                    [repr(float(v)) for v in o]
                    + [repr(float(v)) for v in p]
                    + [Label(int(lab)).canonical, repr(adv.epsilon)]
                )


def read_adversarial_csv(path) -> list[AdversarialSet]:
    """Inverse of ``write_adversarial_csv``; one set per distinct epsilon, file order kept."""
    groups: dict[float, list] = {}
    with Path(path).open(newline="") as fh:
        reader = csv.reader(fh)
        next(reader)
        for row in reader:
            if not row:
                continue
            eps = float(row[-1])
            groups.setdefault(eps, []).append(row)
    out = []
    k = len(FEATURE_NAMES)
    for eps, rows in groups.items():
        orig = np.array([[float(v) for v in r[:k]] for r in rows])
        pert = np.array([[float(v) for v in r[k:2 * k]] for r in rows])
        labels = np.array([int(Label.parse(r[2 * k])) for r in rows], dtype=np.int64)
        out.append(AdversarialSet(orig, pert, labels, eps))
    return out
