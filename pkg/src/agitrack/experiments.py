"""Experiment families: baseline, length-filter sweeps, downsampling
sweep and the PAS documentation audit. Each emits plot-ready rows."""

from __future__ import annotations

import io
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .evaluation import nested_cv
from .features import FeatureTable, feature_table
from .ingest import PAS_GROUPS, PasEntry, ShiftLabel
from .learners import LearnerSpec
from .timebase import ShiftRecord, decimate, filter_by_length

LSE_MINUTES = tuple(range(0, 241, 15))
SSE_MINUTES = tuple(range(480, 239, -15))
DOWNSAMPLE_SECONDS = tuple(range(60, 3601, 60))
RESULT_COLUMNS = ("experiment", "parameter", "learner", "cost", "auc", "n_shifts", "n_positive", "status")


@dataclass(frozen=True)
class ResultRow:
    experiment: str
    parameter: float | None
    learner: str
    cost: bool
    auc: float
    n_shifts: int
    n_positive: int
    status: str = "ok"

    def cells(self) -> list[str]:
        param = "" if self.parameter is None else f"{self.parameter:g}"
        auc = "" if math.isnan(self.auc) else repr(self.auc)
        return [self.experiment, param, self.learner, str(int(self.cost)), auc, str(self.n_shifts), str(self.n_positive), self.status]


@dataclass
class PasAudit:
    """Score histograms per behaviour group and shift class."""

    histograms: dict  # (group, "agitation"|"non_agitation") -> 5 counts
    missing: dict  # same keys -> missing count
    underreport: dict  # group -> share of scored agitation shifts below 3
    unjoined: int

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write("group,shift_class,score_0,score_1,score_2,score_3,score_4,missing,below3_fraction\n")
        for (group, cls), counts in self.histograms.items():
            frac = self.underreport[group] if cls == "agitation" else float("nan")
            frac_s = "" if math.isnan(frac) else repr(frac)
            buf.write(f"{group},{cls},{','.join(map(str, counts))},{self.missing[(group, cls)]},{frac_s}\n")
        buf.write(f"# unjoined={self.unjoined}\n")
        return buf.getvalue()


@dataclass
class ExperimentResult:
    kind: str
    rows: list[ResultRow]
    seed: int
    config: dict = field(default_factory=dict)
    pas: PasAudit | None = None

    def to_csv(self) -> str:
        if self.pas is not None:
            return self.pas.to_csv()
        buf = io.StringIO()
        buf.write(",".join(RESULT_COLUMNS) + "\n")
        for row in self.rows:
            buf.write(",".join(row.cells()) + "\n")
        return buf.getvalue()

    def write(self, path) -> None:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(self.to_csv())

    def rows_for(self, learner: str, cost: bool) -> list[ResultRow]:
        return [r for r in self.rows if r.learner == learner and r.cost == cost]

    def summary(self) -> str:
        if self.pas is not None:
            parts = [f"{g} below-3 on agitation shifts: {self.pas.underreport[g]:.3f}" for g in PAS_GROUPS]
            return f"{self.kind}: " + "; ".join(parts) + f" (unjoined={self.pas.unjoined})"
        lines = [f"{self.kind} (seed {self.seed})"]
        for spec_label in dict.fromkeys((r.learner, r.cost) for r in self.rows):
            rows = [r for r in self.rows_for(*spec_label) if r.status == "ok"]
            name = f"{spec_label[0]}{'_cost' if spec_label[1] else ''}"
            if not rows:
                lines.append(f"  {name}: no evaluable points")
                continue
            best = max(rows, key=lambda r: r.auc)
            where = "" if best.parameter is None else f" at {best.parameter:g}"
            lines.append(f"  {name}: best AUC {best.auc:.3f}{where} over {len(rows)} point(s)")
        return "\n".join(lines)


def _as_table(data) -> FeatureTable:
    if isinstance(data, FeatureTable):
        return data
    return feature_table(data)


def _evaluable(y, k_outer: int, k_inner: int) -> bool:
    if len(y) == 0:
        return False
    smallest = min(int(np.sum(y == 1)), int(np.sum(y == 0)))
    return smallest >= k_outer and smallest - math.ceil(smallest / k_outer) >= k_inner


def _run_points(
    experiment: str,
    points: Sequence,
    subset: Callable,
    learners: Sequence[LearnerSpec],
    seed: int,
    k_outer: int,
    k_inner: int,
    workers: int,
) -> list[ResultRow]:
    def job(point):
        table = subset(point)
        n, n_pos = len(table), int(np.sum(table.labels == 1))
        rows = []
        for spec in learners:
            if not _evaluable(table.labels, k_outer, k_inner):
                rows.append(ResultRow(experiment, point, spec.kind, spec.cost_enabled, float("nan"), n, n_pos, "skipped"))
                continue
            res = nested_cv(table.X, table.labels, spec, k_outer, k_inner, seed)
            rows.append(ResultRow(experiment, point, spec.kind, spec.cost_enabled, res.auc, n, n_pos))
        return rows

    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            chunks = list(pool.map(job, points))
    else:
        chunks = [job(p) for p in points]
    return [row for chunk in chunks for row in chunk]


def _config(learners, k_outer, k_inner, **extra) -> dict:
    return {"learners": [s.label for s in learners], "k_outer": k_outer, "k_inner": k_inner, **extra}


def run_baseline(data, learners: Sequence[LearnerSpec], seed: int, k_outer=10, k_inner=5, workers=1) -> ExperimentResult:
    table = _as_table(data)
    rows = _run_points("Baseline", [None], lambda _: table, learners, seed, k_outer, k_inner, workers)
    return ExperimentResult("Baseline", rows, seed, _config(learners, k_outer, k_inner))


def run_lse(data, learners, seed: int, minutes=LSE_MINUTES, k_outer=10, k_inner=5, workers=1) -> ExperimentResult:
    """Keep shifts with coverage of at least ``b`` minutes, for each ``b``."""
    table = _as_table(data)
    rows = _run_points(
        "LSE", list(minutes), lambda b: table.subset(table.coverage_s >= b * 60), learners, seed, k_outer, k_inner, workers
    )
    return ExperimentResult("LSE", rows, seed, _config(learners, k_outer, k_inner, minutes=list(minutes)))


def run_sse(data, learners, seed: int, minutes=SSE_MINUTES, k_outer=10, k_inner=5, workers=1) -> ExperimentResult:
    """Keep shifts with coverage of at most ``b`` minutes, for each ``b``."""
    table = _as_table(data)
    rows = _run_points(
        "SSE", list(minutes), lambda b: table.subset(table.coverage_s <= b * 60), learners, seed, k_outer, k_inner, workers
    )
    return ExperimentResult("SSE", rows, seed, _config(learners, k_outer, k_inner, minutes=list(minutes)))


def predecimate(shifts, interval_s: int = 60) -> list[ShiftRecord]:
    """Decimate once at the finest sweep interval. Every coarser interval
    that is a multiple of it gives the same result from these records, at a
    fraction of the memory."""
    return [d for d in (decimate(s, interval_s) for s in shifts) if d is not None]


def run_downsample(shifts, learners, seed: int, intervals=DOWNSAMPLE_SECONDS, k_outer=10, k_inner=5, workers=1) -> ExperimentResult:
    """Decimate every shift, drop those left with fewer than 5 points,
    re-extract features and cross-validate, for each interval."""
    shifts = list(shifts)

    def subset(interval):
        return feature_table(d for d in (decimate(s, interval) for s in shifts) if d is not None)

    rows = _run_points("Downsample", list(intervals), subset, learners, seed, k_outer, k_inner, workers)
    return ExperimentResult("Downsample", rows, seed, _config(learners, k_outer, k_inner, intervals=list(intervals)))


def pas_audit(pas_entries: Sequence[PasEntry], labels: Sequence[ShiftLabel]) -> ExperimentResult:
    """Histogram PAS scores by behaviour group for agitation and calm shifts."""
    truth = {lab.key: lab.agitation for lab in labels}
    classes = ("agitation", "non_agitation")
    hist = {(g, c): [0] * 5 for g in PAS_GROUPS for c in classes}
    missing = {(g, c): 0 for g in PAS_GROUPS for c in classes}
    unjoined = 0
    for entry in pas_entries:
        if entry.key not in truth:
            unjoined += 1
            continue
        cls = classes[0] if truth[entry.key] == 1 else classes[1]
        for g in PAS_GROUPS:
            s = entry.score(g)
            if s is None:
                missing[(g, cls)] += 1
            else:
                hist[(g, cls)][s] += 1
    under = {}
    for g in PAS_GROUPS:
        counts = hist[(g, "agitation")]
        scored = sum(counts)
        under[g] = sum(counts[:3]) / scored if scored else 0.0
    return ExperimentResult("PasAudit", [], 0, {}, PasAudit(hist, missing, under, unjoined))
