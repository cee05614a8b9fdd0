"""Generative Gaussian classifiers: naive Bayes and quadratic discriminant analysis."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import EmptyClass, SingularCovariance

_LOG_2PI = np.log(2.0 * np.pi)


def _class_rows(X, y, n_classes, min_rows):
    present = [c for c in range(n_classes) if np.any(y == c)]
    for c in present:
        if np.count_nonzero(y == c) < min_rows:
            raise EmptyClass(f"class {c} has fewer than {min_rows} training rows")
    if not present:
        raise EmptyClass("no training rows")
    return present


@dataclass(frozen=True)
class GaussianNaiveBayes:
    classes: np.ndarray
    log_prior: np.ndarray
    mean: np.ndarray
    var: np.ndarray
    n_classes: int

    def joint_log_likelihood(self, X):
        X = np.asarray(X, dtype=np.float64)
        out = np.empty((X.shape[0], self.classes.size))
        for i in range(self.classes.size):
            diff = X - self.mean[i]
            out[:, i] = self.log_prior[i] - 0.5 * np.sum(
                _LOG_2PI + np.log(self.var[i]) + diff * diff / self.var[i], axis=1
            )
        return out

    def predict(self, X, use_jit=None):
        return self.classes[np.argmax(self.joint_log_likelihood(X), axis=1)]


def fit_gaussian_nb(X, y, n_classes, var_floor=1e-9) -> GaussianNaiveBayes:
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.int64)
    present = _class_rows(X, y, n_classes, 1)
    means, vars_, priors = [], [], []
    for c in present:
        Xc = X[y == c]
        means.append(Xc.mean(axis=0))
        vars_.append(np.maximum(Xc.var(axis=0), var_floor))
        priors.append(Xc.shape[0] / X.shape[0])
    return GaussianNaiveBayes(
        np.array(present, dtype=np.int64),
        np.log(np.array(priors)),
        np.array(means),
        np.array(vars_),
        int(n_classes),
    )


@dataclass(frozen=True)
class QuadraticDiscriminant:
    classes: np.ndarray
    log_prior: np.ndarray
    mean: np.ndarray
    chol: np.ndarray  # lower Cholesky factor of each class covariance
    n_classes: int

    def discriminant(self, X):
        X = np.asarray(X, dtype=np.float64)
        out = np.empty((X.shape[0], self.classes.size))
        for i in range(self.classes.size):
            L = self.chol[i]
            z = np.linalg.solve(L, (X - self.mean[i]).T)
            maha = np.sum(z * z, axis=0)
            logdet = 2.0 * np.sum(np.log(np.diag(L)))
            out[:, i] = self.log_prior[i] - 0.5 * logdet - 0.5 * maha
        return out

    def predict(self, X, use_jit=None):
        return self.classes[np.argmax(self.discriminant(X), axis=1)]


def _cholesky_or_none(cov):
    try:
        return np.linalg.cholesky(cov)
    except np.linalg.LinAlgError:
        return None


def fit_qda(X, y, n_classes, ridge=1e-6, max_condition=1e12) -> QuadraticDiscriminant:
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.int64)
    present = _class_rows(X, y, n_classes, 2)
    d = X.shape[1]
    means, chols, priors = [], [], []
    for c in present:
        Xc = X[y == c]
        mu = Xc.mean(axis=0)
        cov = np.cov(Xc, rowvar=False, ddof=1).reshape(d, d)
        L = _cholesky_or_none(cov)
        if L is None or np.linalg.cond(cov) > max_condition:
            L = _cholesky_or_none(cov + ridge * np.eye(d))
            if L is None:
                raise SingularCovariance(f"covariance of class {c} is singular even with ridge {ridge}")
        means.append(mu)
        chols.append(L)
        priors.append(Xc.shape[0] / X.shape[0])
    return QuadraticDiscriminant(
        np.array(present, dtype=np.int64),
        np.log(np.array(priors)),
        np.array(means),
        np.array(chols),
        int(n_classes),
    )
