"""Confusion matrices and the F1 family computed from them."""
from __future__ import annotations

import numpy as np

from .errors import LengthMismatch

N_CLASSES = 4


def confusion_matrix(predictions, truths, n_classes: int = N_CLASSES) -> np.ndarray:
    """Rows are actual classes, columns predicted classes."""
    p = np.asarray(predictions, dtype=np.int64).ravel()
    t = np.asarray(truths, dtype=np.int64).ravel()
    if p.size != t.size:
        raise LengthMismatch(f"{p.size} predictions vs {t.size} truths")
    if p.size == 0:
        raise LengthMismatch("nothing to evaluate")
    cm = np.zeros((n_classes, n_classes), dtype=np.int64)
    np.add.at(cm, (t, p), 1)
    return cm


def row_recall(cm) -> np.ndarray:
    cm = np.asarray(cm, dtype=np.float64)
    support = cm.sum(axis=1)
    return np.divide(np.diag(cm), support, out=np.zeros(len(cm)), where=support > 0)


def column_precision(cm) -> np.ndarray:
    cm = np.asarray(cm, dtype=np.float64)
    predicted = cm.sum(axis=0)
    return np.divide(np.diag(cm), predicted, out=np.zeros(len(cm)), where=predicted > 0)


def per_class_f1(cm) -> np.ndarray:
    """Per-class F1. A class absent from both truth and prediction scores 1."""
    cm = np.asarray(cm, dtype=np.float64)
    support = cm.sum(axis=1)
    predicted = cm.sum(axis=0)
    p = column_precision(cm)
    r = row_recall(cm)
    denom = p + r
    f1 = np.divide(2 * p * r, denom, out=np.zeros(len(cm)), where=denom > 0)
    f1[(support == 0) & (predicted == 0)] = 1.0
    return f1


def macro_f1(cm) -> float:
    if np.asarray(cm).sum() <= 0:
        raise ValueError("empty confusion matrix")
    return float(np.mean(per_class_f1(cm)))


def weighted_f1(cm) -> float:
    cm = np.asarray(cm)
    support = cm.sum(axis=1).astype(np.float64)
    if support.sum() <= 0:
        raise ValueError("empty confusion matrix")
    return float(np.sum(per_class_f1(cm) * support) / support.sum())


def macro_f1_score(predictions, truths) -> float:
    return macro_f1(confusion_matrix(predictions, truths))
