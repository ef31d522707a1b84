"""Random forest of weighted-Gini classification trees.

Tree growth runs in numba; each tree is grown from its own seed so a
forest is reproducible bit-for-bit from the forest seed.
"""

from __future__ import annotations

from dataclasses import dataclass

import numba
import numpy as np

from .base import as_matrix, check_binary, check_width, summarize
from .costs import UNIT_COST, CostMatrix


@numba.njit(cache=True, nogil=True)
def _grow_tree(X, y, w, n_predictors, seed):
    """Grow one tree on a bootstrap sample of the rows of ``X``.

    Returns node arrays ``(feature, threshold, left, right, value)``; leaves
    have ``feature == -1`` and ``value`` holds the weighted positive share.
    """
    np.random.seed(seed)
    n, n_feat = X.shape
    idx = np.random.randint(0, n, n)

    max_nodes = 2 * n + 1
    feature = np.full(max_nodes, -1, np.int64)
    threshold = np.zeros(max_nodes)
    left = np.full(max_nodes, -1, np.int64)
    right = np.full(max_nodes, -1, np.int64)
    value = np.zeros(max_nodes)

    stack_node = np.empty(max_nodes, np.int64)
    stack_lo = np.empty(max_nodes, np.int64)
    stack_hi = np.empty(max_nodes, np.int64)
    top = 0
    stack_node[0] = 0
    stack_lo[0] = 0
    stack_hi[0] = n
    top = 1
    n_nodes = 1

    perm = np.arange(n_feat)
    vals = np.empty(n)
    buf = np.empty(n, np.int64)

    while top > 0:
        top -= 1
        node = stack_node[top]
        lo = stack_lo[top]
        hi = stack_hi[top]
        m = hi - lo

        wsum = 0.0
        wpos = 0.0
        for k in range(lo, hi):
            wsum += w[idx[k]]
            if y[idx[k]] == 1:
                wpos += w[idx[k]]
        value[node] = wpos / wsum
        if wpos <= 0.0 or wpos >= wsum or m < 2:
            continue

        best_score = np.inf
        best_f = -1
        best_thr = 0.0
        for k in range(n_predictors):
            j = k + np.random.randint(0, n_feat - k)
            tmp = perm[k]
            perm[k] = perm[j]
            perm[j] = tmp
            f = perm[k]
            for t in range(m):
                vals[t] = X[idx[lo + t], f]
            order = np.argsort(vals[:m], kind="mergesort")
            wl = 0.0
            pl = 0.0
            for t in range(m - 1):
                r = idx[lo + order[t]]
                wl += w[r]
                if y[r] == 1:
                    pl += w[r]
                a = vals[order[t]]
                b = vals[order[t + 1]]
                if a == b:
                    continue
                wr = wsum - wl
                pr = wpos - pl
                # weighted Gini: sum over children of weight * 2p(1-p)
                score = (pl - pl * pl / wl) + (pr - pr * pr / wr)
                if score < best_score - 1e-12:
                    best_score = score
                    best_f = f
                    thr = a + (b - a) * 0.5
                    if thr >= b:
                        thr = a
                    best_thr = thr
        if best_f < 0:
            continue

        # stable partition of idx[lo:hi]
        nl = 0
        for k in range(lo, hi):
            if X[idx[k], best_f] <= best_thr:
                buf[nl] = idx[k]
                nl += 1
        nr = nl
        for k in range(lo, hi):
            if X[idx[k], best_f] > best_thr:
                buf[nr] = idx[k]
                nr += 1
        for k in range(m):
            idx[lo + k] = buf[k]

        feature[node] = best_f
        threshold[node] = best_thr
        left[node] = n_nodes
        right[node] = n_nodes + 1
        stack_node[top] = n_nodes + 1
        stack_lo[top] = lo + nl
        stack_hi[top] = hi
        top += 1
        stack_node[top] = n_nodes
        stack_lo[top] = lo
        stack_hi[top] = lo + nl
        top += 1
        n_nodes += 2

    return (
        feature[:n_nodes].copy(),
        threshold[:n_nodes].copy(),
        left[:n_nodes].copy(),
        right[:n_nodes].copy(),
        value[:n_nodes].copy(),
    )


@numba.njit(cache=True, nogil=True)
def _grow_forest(X, y, w, n_predictors, seeds):
    n_trees = seeds.shape[0]
    trees = []
    for t in range(n_trees):
        trees.append(_grow_tree(X, y, w, n_predictors, seeds[t]))
    total = 0
    for t in range(n_trees):
        total += trees[t][0].shape[0]
    offsets = np.zeros(n_trees + 1, np.int64)
    feature = np.empty(total, np.int64)
    threshold = np.empty(total)
    left = np.empty(total, np.int64)
    right = np.empty(total, np.int64)
    value = np.empty(total)
    pos = 0
    for t in range(n_trees):
        f, th, lf, rt, v = trees[t]
        k = f.shape[0]
        feature[pos : pos + k] = f
        threshold[pos : pos + k] = th
        left[pos : pos + k] = lf
        right[pos : pos + k] = rt
        value[pos : pos + k] = v
        pos += k
        offsets[t + 1] = pos
    return offsets, feature, threshold, left, right, value


@numba.njit(cache=True, nogil=True)
def _predict_forest(X, offsets, feature, threshold, left, right, value):
    n = X.shape[0]
    n_trees = offsets.shape[0] - 1
    out = np.zeros(n)
    for i in range(n):
        acc = 0.0
        for t in range(n_trees):
            base = offsets[t]
            node = 0
            while feature[base + node] >= 0:
                if X[i, feature[base + node]] <= threshold[base + node]:
                    node = left[base + node]
                else:
                    node = right[base + node]
            acc += value[base + node]
        out[i] = acc / n_trees
    return out


@dataclass(frozen=True, eq=False)
class ForestModel:
    offsets: np.ndarray
    feature: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    value: np.ndarray
    n_features: int
    hyperparameters: dict
    kind: str = "RF"

    @property
    def n_trees(self) -> int:
        return len(self.offsets) - 1

    def tree_sizes(self) -> np.ndarray:
        return np.diff(self.offsets)

    def predict_scores(self, X) -> np.ndarray:
        X = check_width(self, X)
        return _predict_forest(X, self.offsets, self.feature, self.threshold, self.left, self.right, self.value)

    def summary(self) -> str:
        sizes = self.tree_sizes()
        return summarize(self, [f"trees: {self.n_trees}", f"mean_nodes: {sizes.mean():.1f}"])


def train_rf(X, y, n_trees: int, n_predictors: int, cost: CostMatrix = UNIT_COST, seed: int = 0) -> ForestModel:
    """Bootstrap forest; each split searches ``n_predictors`` features drawn
    without replacement. Scores are mean leaf positive shares."""
    X = as_matrix(X)
    y = check_binary(y)
    if n_trees < 1:
        raise ValueError("n_trees must be at least 1")
    if not 1 <= n_predictors <= X.shape[1]:
        raise ValueError(f"n_predictors must lie in [1, {X.shape[1]}], got {n_predictors}")
    seeds = np.random.SeedSequence(seed).generate_state(n_trees, dtype=np.uint32).astype(np.int64)
    arrays = _grow_forest(np.ascontiguousarray(X), y, cost.sample_weights(y), int(n_predictors), seeds)
    return ForestModel(*arrays, n_features=X.shape[1], hyperparameters={"n_trees": n_trees, "n_predictors": n_predictors})
