"""Soft-margin RBF support vector machine trained by sequential minimal
optimisation with second-order working-set selection."""

from __future__ import annotations

from dataclasses import dataclass

import numba
import numpy as np
from scipy.special import expit

from .base import ConvergenceError, Standardizer, as_matrix, check_binary, check_width, summarize
from .costs import UNIT_COST, CostMatrix

KKT_TOL = 1e-3
MAX_PAIR_UPDATES = 1_000_000
_TAU = 1e-12


def rbf_kernel(A, B, kernel_scale: float) -> np.ndarray:
    """``exp(-||a - b||^2 / (2 s^2))`` for every row pair."""
    sq = (A * A).sum(1)[:, None] + (B * B).sum(1)[None, :] - 2.0 * (A @ B.T)
    np.maximum(sq, 0.0, out=sq)
    return np.exp(-sq / (2.0 * kernel_scale**2))


@numba.njit(cache=True, nogil=True)
def _decision(Z, sv, coef, bias, gamma):
    # row by row, so a score never depends on which other rows are scored
    out = np.empty(Z.shape[0])
    for i in range(Z.shape[0]):
        acc = 0.0
        for j in range(sv.shape[0]):
            d = 0.0
            for k in range(Z.shape[1]):
                t = Z[i, k] - sv[j, k]
                d += t * t
            acc += coef[j] * np.exp(-d * gamma)
        out[i] = acc + bias
    return out


@numba.njit(cache=True, nogil=True)
def _smo(K, y, C, tol, max_iter):
    """Solve ``min 1/2 a'Qa - e'a`` s.t. ``0 <= a_i <= C_i``, ``y'a = 0``
    with ``Q_ij = y_i y_j K_ij``.

    Returns ``(alpha, rho, n_iter, gap)``; ``n_iter == -1`` signals that
    ``max_iter`` pair updates did not reach the tolerance.
    """
    n = y.shape[0]
    alpha = np.zeros(n)
    G = -np.ones(n)
    it = 0
    gap = np.inf
    while True:
        # i: maximal violating index in I_up
        gmax = -np.inf
        i = -1
        for t in range(n):
            if y[t] == 1:
                if alpha[t] < C[t] and -G[t] >= gmax:
                    gmax = -G[t]
                    i = t
            else:
                if alpha[t] > 0 and G[t] >= gmax:
                    gmax = G[t]
                    i = t
        gmax2 = -np.inf
        j = -1
        obj_min = np.inf
        for t in range(n):
            if y[t] == 1:
                if alpha[t] > 0:
                    diff = gmax + G[t]
                    if G[t] >= gmax2:
                        gmax2 = G[t]
                    if diff > 0 and i >= 0:
                        quad = K[i, i] + K[t, t] - 2.0 * K[i, t]
                        if quad <= 0:
                            quad = _TAU
                        obj = -(diff * diff) / quad
                        if obj <= obj_min:
                            j = t
                            obj_min = obj
            else:
                if alpha[t] < C[t]:
                    diff = gmax - G[t]
                    if -G[t] >= gmax2:
                        gmax2 = -G[t]
                    if diff > 0 and i >= 0:
                        quad = K[i, i] + K[t, t] - 2.0 * K[i, t]
                        if quad <= 0:
                            quad = _TAU
                        obj = -(diff * diff) / quad
                        if obj <= obj_min:
                            j = t
                            obj_min = obj
        gap = gmax + gmax2
        if gap < tol or j == -1 or i == -1:
            break
        if it >= max_iter:
            it = -1
            break
        it += 1

        Ci = C[i]
        Cj = C[j]
        ai_old = alpha[i]
        aj_old = alpha[j]
        Kij = K[i, j]
        if y[i] != y[j]:
            quad = K[i, i] + K[j, j] - 2.0 * Kij
            if quad <= 0:
                quad = _TAU
            delta = (-G[i] - G[j]) / quad
            d = alpha[i] - alpha[j]
            alpha[i] += delta
            alpha[j] += delta
            if d > 0:
                if alpha[j] < 0:
                    alpha[j] = 0.0
                    alpha[i] = d
            else:
                if alpha[i] < 0:
                    alpha[i] = 0.0
                    alpha[j] = -d
            if d > Ci - Cj:
                if alpha[i] > Ci:
                    alpha[i] = Ci
                    alpha[j] = Ci - d
            else:
                if alpha[j] > Cj:
                    alpha[j] = Cj
                    alpha[i] = Cj + d
        else:
            quad = K[i, i] + K[j, j] - 2.0 * Kij
            if quad <= 0:
                quad = _TAU
            delta = (G[i] - G[j]) / quad
            s = alpha[i] + alpha[j]
            alpha[i] -= delta
            alpha[j] += delta
            if s > Ci:
                if alpha[i] > Ci:
                    alpha[i] = Ci
                    alpha[j] = s - Ci
            else:
                if alpha[j] < 0:
                    alpha[j] = 0.0
                    alpha[i] = s
            if s > Cj:
                if alpha[j] > Cj:
                    alpha[j] = Cj
                    alpha[i] = s - Cj
            else:
                if alpha[i] < 0:
                    alpha[i] = 0.0
                    alpha[j] = s

        dai = alpha[i] - ai_old
        daj = alpha[j] - aj_old
        for t in range(n):
            G[t] += y[t] * (y[i] * K[i, t] * dai + y[j] * K[j, t] * daj)

    # offset from free vectors, or the midpoint of the feasible interval
    ub = np.inf
    lb = -np.inf
    n_free = 0
    s_free = 0.0
    for t in range(n):
        yg = y[t] * G[t]
        if alpha[t] >= C[t]:
            if y[t] == -1:
                ub = min(ub, yg)
            else:
                lb = max(lb, yg)
        elif alpha[t] <= 0:
            if y[t] == 1:
                ub = min(ub, yg)
            else:
                lb = max(lb, yg)
        else:
            n_free += 1
            s_free += yg
    if n_free > 0:
        rho = s_free / n_free
    else:
        rho = (ub + lb) / 2.0
    return alpha, rho, it, gap


def platt_fit(decision, y01, max_iter: int = 100) -> tuple[float, float]:
    """Fit ``P(y=1 | f) = 1 / (1 + exp(A f + B))`` by Newton's method with
    Platt's smoothed targets, which keep the fit finite on separable data."""
    f = np.asarray(decision, dtype=float)
    n_pos = int(np.sum(y01 == 1))
    n_neg = len(f) - n_pos
    t = np.where(y01 == 1, (n_pos + 1.0) / (n_pos + 2.0), 1.0 / (n_neg + 2.0))
    a, b = 0.0, np.log((n_neg + 1.0) / (n_pos + 1.0))

    def nll(a, b):
        z = f * a + b
        return float(np.sum(t * z + np.logaddexp(0.0, -z)))

    obj = nll(a, b)
    for _ in range(max_iter):
        z = f * a + b
        p = expit(-z)  # model probability of the positive class
        q = 1.0 - p
        d1 = t - q
        d2 = p * q
        h11 = float(np.sum(f * f * d2)) + 1e-12
        h22 = float(np.sum(d2)) + 1e-12
        h21 = float(np.sum(f * d2))
        g1 = float(np.sum(f * d1))
        g2 = float(np.sum(d1))
        if abs(g1) < 1e-5 and abs(g2) < 1e-5:
            break
        det = h11 * h22 - h21 * h21
        da = -(h22 * g1 - h21 * g2) / det
        db = -(-h21 * g1 + h11 * g2) / det
        gd = g1 * da + g2 * db
        step = 1.0
        while step >= 1e-10:
            new = nll(a + step * da, b + step * db)
            if new < obj + 1e-4 * step * gd:
                a, b, obj = a + step * da, b + step * db, new
                break
            step /= 2
        else:
            break
    return a, b


@dataclass(frozen=True, eq=False)
class SvmModel:
    support_vectors: np.ndarray
    dual_coef: np.ndarray  # alpha_i * y_i for the support vectors
    bias: float
    kernel_scale: float
    standardizer: Standardizer
    hyperparameters: dict
    n_iter: int
    kkt_gap: float
    alpha: np.ndarray  # full dual vector, training order
    platt: tuple = (-1.0, 0.0)
    kind: str = "SVM"

    @property
    def n_features(self) -> int:
        return len(self.standardizer.mean)

    def decision_function(self, X) -> np.ndarray:
        Z = self.standardizer.transform(check_width(self, X))
        gamma = 1.0 / (2.0 * self.kernel_scale**2)
        return _decision(np.ascontiguousarray(Z), self.support_vectors, self.dual_coef, float(self.bias), gamma)

    def predict_scores(self, X) -> np.ndarray:
        """Platt-calibrated positive-class probability."""
        a, b = self.platt
        return expit(-(a * self.decision_function(X) + b))

    def summary(self) -> str:
        return summarize(
            self,
            [
                f"support_vectors: {len(self.dual_coef)}",
                f"pair_updates: {self.n_iter}",
                f"kkt_gap: {self.kkt_gap:.3e}",
            ],
        )


def train_svm(X, y, box_c: float, kernel_scale: float, cost: CostMatrix = UNIT_COST) -> SvmModel:
    """Per-class box constraints ``box_c * c_fn`` (positives) and
    ``box_c * c_fp`` (negatives)."""
    X = as_matrix(X)
    y01 = check_binary(y)
    if box_c <= 0 or kernel_scale <= 0:
        raise ValueError("box constraint and kernel scale must be positive")
    std = Standardizer.fit(X)
    Z = std.transform(X)
    ypm = np.where(y01 == 1, 1, -1).astype(np.int64)
    C = np.where(y01 == 1, box_c * cost.c_fn, box_c * cost.c_fp)
    K = rbf_kernel(Z, Z, kernel_scale)
    alpha, rho, n_iter, gap = _smo(K, ypm, C, KKT_TOL, MAX_PAIR_UPDATES)
    if n_iter < 0:
        raise ConvergenceError(
            "SMO did not reach KKT tolerance",
            pair_updates=MAX_PAIR_UPDATES,
            kkt_gap=gap,
            box_c=box_c,
            kernel_scale=kernel_scale,
            n=len(y01),
        )
    sv = alpha > 0
    # training decision values straight from the dual solution
    train_decision = K[:, sv] @ (alpha * ypm)[sv] - rho if sv.any() else np.full(len(y01), -rho)
    return SvmModel(
        support_vectors=Z[sv],
        dual_coef=(alpha * ypm)[sv],
        bias=-rho,
        kernel_scale=kernel_scale,
        standardizer=std,
        hyperparameters={"box_c": box_c, "kernel_scale": kernel_scale},
        n_iter=n_iter,
        kkt_gap=gap,
        alpha=alpha,
        platt=platt_fit(train_decision, y01),
    )
