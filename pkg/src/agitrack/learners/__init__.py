"""Cost-sensitive classifiers that emit continuous scores for ROC analysis."""

from __future__ import annotations

from .base import (
    LR_LAMBDAS,
    RF_TREES,
    SVM_GRID_VALUES,
    ConvergenceError,
    LearnerSpec,
    Standardizer,
    predictor_grid,
)
from .costs import UNIT_COST, CostMatrix, compute_cost_matrix
from .forest import ForestModel, train_rf
from .logistic import LogisticModel, lr_gradient, lr_objective, train_lr
from .svm import SvmModel, rbf_kernel, train_svm


def fit(kind: str, X, y, params: dict, cost: CostMatrix = UNIT_COST, seed: int = 0):
    """Train learner ``kind`` with one grid cell's keyword arguments."""
    if kind == "LR":
        return train_lr(X, y, cost=cost, **params)
    if kind == "RF":
        return train_rf(X, y, cost=cost, seed=seed, **params)
    if kind == "SVM":
        return train_svm(X, y, cost=cost, **params)
    raise ValueError(f"unknown learner kind {kind!r}")


def predict_scores(model, X):
    """One finite score per row; larger means more agitation-like."""
    return model.predict_scores(X)


__all__ = [
    "ConvergenceError",
    "CostMatrix",
    "ForestModel",
    "LR_LAMBDAS",
    "LearnerSpec",
    "LogisticModel",
    "RF_TREES",
    "SVM_GRID_VALUES",
    "Standardizer",
    "SvmModel",
    "UNIT_COST",
    "compute_cost_matrix",
    "fit",
    "lr_gradient",
    "lr_objective",
    "predict_scores",
    "predictor_grid",
    "rbf_kernel",
    "train_lr",
    "train_rf",
    "train_svm",
]
