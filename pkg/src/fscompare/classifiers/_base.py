from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np


class ConvergenceError(RuntimeError):
    """A solver hit ``max_iter`` before meeting its stopping rule."""

    def __init__(self, message, residual=None):
        super().__init__(message)
        self.residual = residual


class Classifier(str, enum.Enum):
    RF = "RF"
    SVM = "SVM"
    RIDGE = "RIDGE"
    LASSO = "LASSO"


@dataclass(frozen=True)
class TrainConfig:
    """Hyperparameters shared by the four classifiers.

    ``lam`` penalizes ridge, ``lasso_lam`` lasso; both act on standardized
    features. ``c`` is the SVM cost.
    """

    lam: float = 1.0
    lasso_lam: float = 0.05
    c: float = 1.0
    n_trees: int = 500
    max_iter: int = 10_000
    tol: float = 1e-6
    seed: int = 0

    def __post_init__(self):
        for name in ("lam", "lasso_lam", "c", "tol"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if self.n_trees < 1 or self.max_iter < 1:
            raise ValueError("n_trees and max_iter must be positive")
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must be a 64-bit unsigned integer")


def check_training_data(X, y):
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y)
    if X.ndim != 2 or len(X) != len(y):
        raise ValueError(f"X must be (m, k) with m = len(y); got {X.shape} and {y.shape}")
    if len(X) < 2:
        raise ValueError("need at least 2 training samples")
    if not np.all(np.isin(y, (-1, 1))):
        raise ValueError("labels must be +1/-1")
    if np.all(y == y[0]):
        raise ValueError("both classes must be present in the training data")
    if not np.all(np.isfinite(X)):
        raise ValueError("training data must be finite")
    return X, y.astype(np.float64)


@dataclass(frozen=True)
class Scaler:
    """Training-fold column means and standard deviations.

    ``constant`` marks columns with no spread; their std is stored as 1 and
    the models force their weight to 0.
    """

    mean: np.ndarray
    std: np.ndarray
    constant: np.ndarray

    @classmethod
    def fit(cls, X):
        mean = X.mean(axis=0)
        std = X.std(axis=0)
        scale = np.maximum(np.abs(mean), 1.0)
        constant = std <= 1e-12 * scale
        return cls(mean, np.where(constant, 1.0, std), constant)

    def transform(self, X):
        return (np.asarray(X, dtype=np.float64) - self.mean) / self.std
