"""Stratified nested cross-validation and ROC analysis on concatenated scores."""

from __future__ import annotations

import io
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.stats import rankdata

from .learners import UNIT_COST, CostMatrix, LearnerSpec, Standardizer, compute_cost_matrix, fit
from .learners.base import format_params


@dataclass(frozen=True)
class FoldPlan:
    k: int
    assignment: np.ndarray
    seed: int

    def split(self, fold: int) -> tuple[np.ndarray, np.ndarray]:
        test = np.flatnonzero(self.assignment == fold)
        train = np.flatnonzero(self.assignment != fold)
        return train, test


def _check_both_classes(labels) -> np.ndarray:
    y = np.asarray(labels)
    if not (np.any(y == 1) and np.any(y == 0)):
        raise ValueError("both classes must be present")
    return y


def stratified_folds(labels, k: int, seed: int, groups=None) -> FoldPlan:
    """Deal each class, shuffled, round-robin into ``k`` folds.

    Negatives continue the deal where positives stopped, so fold sizes
    differ by at most one. With ``groups`` every group lands in a single
    fold (greedy by positive count); class balance is then best-effort.
    """
    y = np.asarray(labels)
    if k < 2:
        raise ValueError("k must be at least 2")
    rng = np.random.default_rng(seed)
    assignment = np.empty(len(y), dtype=np.int64)
    if groups is not None:
        return FoldPlan(k, _grouped_assignment(y, np.asarray(groups), k, rng), seed)
    start = 0
    for cls in (1, 0):
        members = np.flatnonzero(y == cls)
        if len(members) < k:
            raise ValueError(f"class {cls} has {len(members)} members, fewer than k={k}")
        members = rng.permutation(members)
        assignment[members] = (start + np.arange(len(members))) % k
        start = (start + len(members)) % k
    return FoldPlan(k, assignment, seed)


def _grouped_assignment(y, groups, k, rng):
    uniq = list(dict.fromkeys(groups.tolist()))
    if len(uniq) < k:
        raise ValueError(f"{len(uniq)} groups cannot fill {k} folds")
    order = rng.permutation(len(uniq))
    pos = np.zeros(k)
    size = np.zeros(k)
    assignment = np.empty(len(y), dtype=np.int64)
    # most positive groups first, then fill the fold with fewest positives
    stats = [(int(y[groups == uniq[i]].sum()), int((groups == uniq[i]).sum()), i) for i in order]
    stats.sort(key=lambda s: (-s[0], -s[1]))
    for n_pos, n, i in stats:
        f = int(np.lexsort((size, pos))[0])
        assignment[groups == uniq[i]] = f
        pos[f] += n_pos
        size[f] += n
    return assignment


def roc_auc(scores, labels) -> float:
    """Mann-Whitney estimate of P(score+ > score-) + P(tie) / 2."""
    y = _check_both_classes(labels)
    s = np.asarray(scores, dtype=float)
    ranks = rankdata(s)  # mid-ranks for ties
    n_pos = int(np.count_nonzero(y == 1))
    n_neg = len(y) - n_pos
    u = ranks[y == 1].sum() - n_pos * (n_pos + 1) / 2.0
    return float(u / (n_pos * n_neg))


def roc_curve(scores, labels) -> list[tuple[float, float]]:
    """ROC staircase from (0, 0) to (1, 1), one vertex per distinct score."""
    y = _check_both_classes(labels)
    s = np.asarray(scores, dtype=float)
    order = np.argsort(-s, kind="mergesort")
    s, y = s[order], y[order]
    n_pos = np.count_nonzero(y == 1)
    n_neg = len(y) - n_pos
    # last index of each run of equal scores
    ends = np.flatnonzero(np.r_[s[1:] != s[:-1], True])
    tp = np.cumsum(y == 1)[ends]
    fp = np.cumsum(y == 0)[ends]
    pts = [(0.0, 0.0)]
    pts.extend((float(f / n_neg), float(t / n_pos)) for f, t in zip(fp, tp))
    return pts


def curve_area(points) -> float:
    """Trapezoidal area under a list of (fpr, tpr) points."""
    p = np.asarray(points)
    return float(np.sum(np.diff(p[:, 0]) * (p[1:, 1] + p[:-1, 1]) / 2.0))


@dataclass
class FoldRecord:
    fold: int
    params: dict
    cost: CostMatrix
    train_index: np.ndarray
    standardizer: Standardizer | None
    inner_auc: float


@dataclass
class CvResult:
    spec: LearnerSpec
    concatenated_scores: np.ndarray
    labels: np.ndarray
    auc: float
    plan: FoldPlan
    folds: list[FoldRecord] = field(default_factory=list)
    keys: list | None = None

    @property
    def chosen_params(self) -> list[dict]:
        return [f.params for f in self.folds]

    @property
    def cost_matrices(self) -> list[CostMatrix]:
        return [f.cost for f in self.folds]

    def summary_line(self) -> str:
        return f"learner={self.spec.kind} cost={int(self.spec.cost_enabled)} auc={self.auc!r}"

    def to_csv(self) -> str:
        """One row per shift (key, label, score, outer fold, chosen
        hyperparameters) followed by a ``#`` summary line."""
        buf = io.StringIO()
        buf.write("participant_id,date,shift_kind,label,score,outer_fold,params\n")
        keys = self.keys or [(str(i), "", "") for i in range(len(self.labels))]
        for i, key in enumerate(keys):
            fold = int(self.plan.assignment[i])
            pid, day, kind = key
            day = day.isoformat() if hasattr(day, "isoformat") else day
            buf.write(
                f"{pid},{day},{kind},{int(self.labels[i])},{float(self.concatenated_scores[i])!r},"
                f"{fold},{format_params(self.folds[fold].params)}\n"
            )
        buf.write(f"# {self.summary_line()}\n")
        return buf.getvalue()


def _seed_for(seed: int, *path: int) -> int:
    return int(np.random.SeedSequence([seed, *path]).generate_state(1)[0])


def _cost_for(spec: LearnerSpec, y) -> CostMatrix:
    return compute_cost_matrix(y) if spec.cost_enabled else UNIT_COST


def _inner_search(X, y, spec: LearnerSpec, cells, k_inner: int, seed: int) -> tuple[int, float]:
    plan = stratified_folds(y, k_inner, seed)
    best, best_auc = 0, -np.inf
    for c, params in enumerate(cells):
        aucs = []
        for f in range(k_inner):
            tr, te = plan.split(f)
            model = fit(spec.kind, X[tr], y[tr], params, _cost_for(spec, y[tr]), _seed_for(seed, c, f))
            aucs.append(roc_auc(model.predict_scores(X[te]), y[te]))
        mean = float(np.mean(aucs))
        # strict comparison keeps the first cell on ties
        if mean > best_auc:
            best, best_auc = c, mean
    return best, best_auc


class FoldError(RuntimeError):
    pass


def nested_cv(
    features,
    labels,
    spec: LearnerSpec,
    k_outer: int = 10,
    k_inner: int = 5,
    seed: int = 0,
    keys=None,
    groups=None,
    workers: int = 1,
) -> CvResult:
    """Outer stratified ``k_outer``-fold CV; each training split tunes the
    grid by mean inner-fold AUC, refits, and scores its held-out fold.

    The returned AUC is computed once on the concatenated held-out scores.
    """
    X = np.asarray(features, dtype=float)
    y = np.asarray(labels).astype(np.int64)
    cells = spec.cells(X.shape[1])
    plan = stratified_folds(y, k_outer, seed, groups=groups)
    run_seed = _seed_for(seed, spec.seed)

    def outer(fold: int):
        tr, te = plan.split(fold)
        try:
            best, inner_auc = _inner_search(X[tr], y[tr], spec, cells, k_inner, _seed_for(run_seed, fold))
            cost = _cost_for(spec, y[tr])
            model = fit(spec.kind, X[tr], y[tr], cells[best], cost, _seed_for(run_seed, fold, 10**6))
            scores = model.predict_scores(X[te])
        except Exception as exc:
            raise FoldError(f"{spec.label}, outer fold {fold}: {exc}") from exc
        rec = FoldRecord(fold, cells[best], cost, tr, getattr(model, "standardizer", None), inner_auc)
        return te, scores, rec

    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            results = list(pool.map(outer, range(k_outer)))
    else:
        results = [outer(f) for f in range(k_outer)]

    concatenated = np.empty(len(y))
    records = []
    for te, scores, rec in results:
        concatenated[te] = scores
        records.append(rec)
    return CvResult(spec, concatenated, y, roc_auc(concatenated, y), plan, records, keys)
