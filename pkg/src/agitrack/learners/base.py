from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

LR_LAMBDAS = (0.01, 0.05, 0.1, 1.0, 10.0, 100.0)
RF_TREES = (10, 30, 50, 70, 90)
SVM_GRID_VALUES = (0.01, 0.1, 1.0, 10.0, 100.0, 1000.0)


class ConvergenceError(RuntimeError):
    def __init__(self, message: str, **diagnostics):
        self.diagnostics = diagnostics
        detail = ", ".join(f"{k}={v}" for k, v in diagnostics.items())
        super().__init__(f"{message} ({detail})" if detail else message)


@dataclass(frozen=True)
class Standardizer:
    """Per-feature z-score fitted on training rows only."""

    mean: np.ndarray
    scale: np.ndarray

    @classmethod
    def fit(cls, X) -> "Standardizer":
        X = np.asarray(X, dtype=float)
        mean = X.mean(axis=0)
        std = X.std(axis=0)
        # constant columns pass through centred
        scale = np.where(std > 0, std, 1.0)
        return cls(mean, scale)

    def transform(self, X) -> np.ndarray:
        return (np.asarray(X, dtype=float) - self.mean) / self.scale


def predictor_grid(n_features: int) -> tuple[int, ...]:
    """Features tried per split: floor(k f / 5) for k = 1..4, at least 1."""
    return tuple(max(1, (k * n_features) // 5) for k in range(1, 5))


@dataclass(frozen=True)
class LearnerSpec:
    """A learner family with its tuning grid.

    ``grid`` lists keyword-argument dicts for the trainer in declared order;
    when omitted the default grid for ``kind`` is used (the random forest
    grid depends on the feature count, so it is built lazily).
    """

    kind: str
    cost_enabled: bool = False
    seed: int = 0
    grid: tuple = field(default=None)

    def __post_init__(self):
        if self.kind not in ("LR", "RF", "SVM"):
            raise ValueError(f"unknown learner kind {self.kind!r}")
        if self.grid is not None and len(self.grid) == 0:
            raise ValueError("grid must not be empty")

    def cells(self, n_features: int) -> list[dict]:
        if self.grid is not None:
            return [dict(c) for c in self.grid]
        if self.kind == "LR":
            return [{"lam": lam} for lam in LR_LAMBDAS]
        if self.kind == "RF":
            return [
                {"n_trees": t, "n_predictors": p} for t in RF_TREES for p in predictor_grid(n_features)
            ]
        return [{"box_c": c, "kernel_scale": s} for c in SVM_GRID_VALUES for s in SVM_GRID_VALUES]

    @property
    def label(self) -> str:
        return f"{self.kind}{'_cost' if self.cost_enabled else ''}"


def as_matrix(X) -> np.ndarray:
    X = np.asarray(X, dtype=float)
    if X.ndim != 2:
        raise ValueError(f"expected a 2-D feature matrix, got shape {X.shape}")
    if not np.all(np.isfinite(X)):
        raise ValueError("feature matrix contains non-finite values")
    return X


def check_binary(y) -> np.ndarray:
    y = np.asarray(y)
    if not np.all((y == 0) | (y == 1)):
        raise ValueError("labels must be 0 or 1")
    return y.astype(np.int64)


def check_width(model, X) -> np.ndarray:
    X = as_matrix(X)
    if X.shape[1] != model.n_features:
        raise ValueError(f"model expects {model.n_features} features, got {X.shape[1]}")
    return X


def format_params(params: dict) -> str:
    return ";".join(f"{k}={v!r}" for k, v in params.items())


def summarize(model, extra: Sequence[str] = ()) -> str:
    lines = [f"kind: {model.kind}", f"hyperparameters: {format_params(model.hyperparameters)}"]
    lines.extend(extra)
    return "\n".join(lines)
