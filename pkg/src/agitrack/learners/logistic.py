"""Cost-weighted, L2-regularised logistic regression fitted by Newton's method."""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
from scipy.special import expit

from .base import Standardizer, as_matrix, check_binary, check_width, summarize
from .costs import UNIT_COST, CostMatrix

GRAD_TOL = 1e-8
MAX_ITER = 10_000


def _softplus(z):
    # log(1 + exp(z)) without overflow
    return np.logaddexp(0.0, z)


def lr_objective(params, X, y, weights, lam):
    """Weighted negative log-likelihood plus ``lam / 2 * ||w||^2``.

    ``params`` is the weight vector with the intercept appended; the
    intercept is not penalised.
    """
    w, b = params[:-1], params[-1]
    z = X @ w + b
    return float(weights @ (_softplus(z) - y * z) + 0.5 * lam * (w @ w))


def lr_gradient(params, X, y, weights, lam):
    w, b = params[:-1], params[-1]
    r = weights * (expit(X @ w + b) - y)
    return np.concatenate((X.T @ r + lam * w, [r.sum()]))


def _hessian(params, X, weights, lam):
    p = expit(X @ params[:-1] + params[-1])
    s = weights * p * (1.0 - p)
    Xa = np.column_stack((X, np.ones(len(X))))
    H = Xa.T @ (Xa * s[:, None])
    H[np.diag_indices(X.shape[1])] += lam
    return H


@dataclass(frozen=True, eq=False)
class LogisticModel:
    weights: np.ndarray
    intercept: float
    standardizer: Standardizer
    hyperparameters: dict
    converged: bool
    n_iter: int
    grad_norm: float
    kind: str = "LR"

    @property
    def n_features(self) -> int:
        return len(self.weights)

    def predict_scores(self, X) -> np.ndarray:
        Z = self.standardizer.transform(check_width(self, X))
        # row-wise reduction keeps each score independent of the batch
        return expit((Z * self.weights).sum(axis=1) + self.intercept)

    def summary(self) -> str:
        return summarize(
            self,
            [f"converged: {self.converged}", f"iterations: {self.n_iter}", f"grad_max_norm: {self.grad_norm:.3e}"],
        )


def minimize_lr(X, y, weights, lam, params0=None):
    """Newton iterations with backtracking until the gradient max-norm is
    below ``GRAD_TOL``. Returns ``(params, converged, n_iter, grad_norm)``."""
    d = X.shape[1] + 1
    params = np.zeros(d) if params0 is None else np.asarray(params0, dtype=float).copy()
    f = lr_objective(params, X, y, weights, lam)
    g = lr_gradient(params, X, y, weights, lam)
    gnorm = float(np.abs(g).max())
    it = 0
    while gnorm >= GRAD_TOL and it < MAX_ITER:
        it += 1
        H = _hessian(params, X, weights, lam)
        try:
            step = np.linalg.solve(H, g)
        except np.linalg.LinAlgError:
            step = np.linalg.lstsq(H, g, rcond=None)[0]
        t = 1.0
        while True:
            cand = params - t * step
            fc = lr_objective(cand, X, y, weights, lam)
            if fc <= f - 1e-4 * t * (g @ step):
                gc = lr_gradient(cand, X, y, weights, lam)
                break
            # near the optimum objective changes drown in rounding; accept a
            # step that leaves f flat but shrinks the gradient
            if fc <= f + 1e-12 * abs(f):
                gc = lr_gradient(cand, X, y, weights, lam)
                if np.abs(gc).max() < gnorm:
                    break
            t *= 0.5
            if t < 1e-10:
                gc = None
                break
        if gc is None:
            break
        params, f, g = cand, fc, gc
        gnorm = float(np.abs(g).max())
    return params, gnorm < GRAD_TOL, it, gnorm


def train_lr(X, y, lam: float, cost: CostMatrix = UNIT_COST) -> LogisticModel:
    X = as_matrix(X)
    y = check_binary(y).astype(float)
    if lam < 0:
        raise ValueError("lambda must be non-negative")
    std = Standardizer.fit(X)
    Z = std.transform(X)
    params, converged, n_iter, gnorm = minimize_lr(Z, y, cost.sample_weights(y), lam)
    if not converged:
        warnings.warn(f"logistic regression did not converge (|grad|={gnorm:.2e} after {n_iter} iterations)")
    return LogisticModel(params[:-1].copy(), float(params[-1]), std, {"lam": lam}, converged, n_iter, gnorm)
