"""The four classifiers used to score feature subsets.

Every trained model exposes a real-valued decision score where larger
means "more positive", which is all AUC needs.
"""

from __future__ import annotations

import numpy as np

from ._base import Classifier, ConvergenceError, Scaler, TrainConfig
from .forest import Forest, oob_error, train_rf
from .linear import (LinearModel, lasso_lambda_max, logistic_loss_gradient, svm_objectives,
                     train_lasso, train_ridge, train_svm)

TRAINERS = {
    Classifier.RF: train_rf,
    Classifier.SVM: train_svm,
    Classifier.RIDGE: train_ridge,
    Classifier.LASSO: train_lasso,
}


def train(kind, X, y, cfg: TrainConfig = TrainConfig()):
    return TRAINERS[Classifier(kind)](X, y, cfg)


def decision_score(model: LinearModel | Forest, x) -> float:
    """Decision score of a single sample ``x``."""
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 1:
        raise ValueError("x must be a 1-d feature vector")
    return float(model.decision(x[None, :])[0])


__all__ = [
    "Classifier", "ConvergenceError", "Forest", "LinearModel", "Scaler", "TrainConfig",
    "decision_score", "lasso_lambda_max", "logistic_loss_gradient", "oob_error",
    "svm_objectives", "train", "train_lasso", "train_rf", "train_ridge", "train_svm",
]
