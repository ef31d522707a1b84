"""Per-shift feature vector: ten summary statistics per modality plus
tonic/phasic electrodermal descriptors, 49 values in total."""

from __future__ import annotations

import csv
from collections import Counter
from dataclasses import dataclass, field
from typing import Iterable, NamedTuple

import numpy as np

from .ingest import MODALITIES
from .timebase import MIN_POINTS, ShiftRecord

BASIC_STATS = (
    "mean",
    "min",
    "max",
    "std",
    "iqr",
    "range",
    "n_abrupt",
    "max_abrupt",
    "max_gradient",
    "cov",
)
PEAK_STATS = ("trapz", "n_peaks", "peak_max", "peak_min")
TONIC_EXTRAS = ("max_abs_diff", "mode")

TONIC_WINDOW_S = 8.0
# Scale factor making the MAD a consistent estimator of a normal sigma.
MAD_SCALE = 1.4826


def _names() -> tuple[str, ...]:
    names = []
    for m in MODALITIES:
        for stat in BASIC_STATS:
            if m == "TEMP" and stat == "cov":
                continue
            names.append(f"{m.lower()}_{stat}")
    names += [f"eda_phasic_{s}" for s in PEAK_STATS]
    names += [f"eda_tonic_{s}" for s in PEAK_STATS + TONIC_EXTRAS]
    return tuple(names)


FEATURE_NAMES = _names()
N_FEATURES = len(FEATURE_NAMES)
KEY_COLUMNS = ("participant_id", "date", "shift_kind", "coverage_s", "label")


class InsufficientDataError(ValueError):
    pass


class BasicStats(NamedTuple):
    mean: float
    min: float
    max: float
    std: float
    iqr: float
    range: float
    n_abrupt: int
    max_abrupt: float
    max_gradient: float
    cov: float


class EdaDecomposition(NamedTuple):
    tonic: np.ndarray
    phasic: np.ndarray


def abrupt_threshold(abs_diff: np.ndarray) -> float:
    """Robust outlier threshold on absolute first differences:
    median + 3 scaled MADs."""
    med = float(np.median(abs_diff))
    mad = float(np.median(np.abs(abs_diff - med)))
    return med + 3.0 * MAD_SCALE * mad


def basic_stats(series, rate_hz: float) -> BasicStats:
    """Ten summary statistics of one series.

    ``std`` uses the n-1 denominator, ``iqr`` linear-interpolation
    quantiles, and ``cov`` is mean / std (non-finite when std is zero).
    An abrupt change is a first difference whose magnitude exceeds
    :func:`abrupt_threshold`; ``max_gradient`` is the largest absolute
    difference expressed per second.
    """
    x = np.asarray(series, dtype=float)
    if x.ndim != 1 or x.size < MIN_POINTS:
        raise InsufficientDataError(f"need at least {MIN_POINTS} points, got {x.size}")
    lo, hi = float(x.min()), float(x.max())
    # clamp against rounding in the mean of near-constant data
    mean = min(max(float(x.mean()), lo), hi)
    std = float(x.std(ddof=1))
    q1, q3 = np.percentile(x, [25.0, 75.0])
    d = np.abs(np.diff(x))
    tau = abrupt_threshold(d)
    max_abrupt = float(d.max())
    with np.errstate(divide="ignore", invalid="ignore"):
        cov = float(np.float64(mean) / np.float64(std))
    return BasicStats(
        mean=mean,
        min=lo,
        max=hi,
        std=std,
        iqr=float(q3 - q1),
        range=hi - lo,
        n_abrupt=int(np.count_nonzero(d > tau)),
        max_abrupt=max_abrupt,
        max_gradient=max_abrupt * rate_hz,
        cov=cov,
    )


def tonic_window(rate_hz: float) -> int:
    w = max(3, int(round(TONIC_WINDOW_S * rate_hz)))
    return w if w % 2 else w + 1


def decompose_eda(series, rate_hz: float) -> EdaDecomposition:
    """Split EDA into a slow tonic level and the fast phasic remainder.

    The tonic part is a centred moving mean over about 8 s (odd window, at
    least 3 samples); near the edges the window shrinks symmetrically.
    """
    x = np.asarray(series, dtype=float)
    n = x.size
    if n < MIN_POINTS:
        raise InsufficientDataError(f"need at least {MIN_POINTS} points, got {n}")
    half = tonic_window(rate_hz) // 2
    idx = np.arange(n)
    h = np.minimum(half, np.minimum(idx, n - 1 - idx))
    # subtract the mean first so cumulative sums stay well conditioned
    offset = x.mean()
    c = np.concatenate(([0.0], np.cumsum(x - offset)))
    tonic = (c[idx + h + 1] - c[idx - h]) / (2 * h + 1) + offset
    return EdaDecomposition(tonic, x - tonic)


def peak_mask(y: np.ndarray) -> np.ndarray:
    """Boolean mask over ``y[1:-1]`` marking strict local maxima."""
    mid = y[1:-1]
    return (mid > y[:-2]) & (mid > y[2:])


def peak_features(series, spacing_s: float) -> tuple[float, int, float, float]:
    y = np.asarray(series, dtype=float)
    trapz = float(np.sum(y[1:] + y[:-1]) * 0.5 * spacing_s) if y.size >= 2 else 0.0
    if y.size < 3:
        return trapz, 0, 0.0, 0.0
    peaks = y[1:-1][peak_mask(y)]
    if peaks.size == 0:
        return trapz, 0, 0.0, 0.0
    return trapz, int(peaks.size), float(peaks.max()), float(peaks.min())


def tonic_extras(tonic) -> tuple[float, float]:
    """Largest absolute step and the mode after rounding to 0.01
    (ties go to the smallest value)."""
    y = np.asarray(tonic, dtype=float)
    if y.size < 2:
        raise InsufficientDataError("need at least 2 points")
    max_abs_diff = float(np.abs(np.diff(y)).max())
    cents = np.rint(y * 100.0).astype(np.int64)
    values, counts = np.unique(cents, return_counts=True)
    # np.unique sorts, so argmax picks the smallest of tied values
    mode = values[int(np.argmax(counts))] / 100.0
    return max_abs_diff, float(mode)


@dataclass
class QualityTally:
    """Counts of non-finite features replaced by 0.0, by feature name."""

    replaced: Counter = field(default_factory=Counter)

    @property
    def total(self) -> int:
        return sum(self.replaced.values())


def shift_features(shift: ShiftRecord, tally: QualityTally | None = None) -> np.ndarray:
    """49-value feature vector in :data:`FEATURE_NAMES` order."""
    rate = shift.common_rate_hz
    values = []
    for m in MODALITIES:
        stats = basic_stats(shift.series[m], rate)
        values.extend(stats[:-1] if m == "TEMP" else stats)
    tonic, phasic = decompose_eda(shift.series["EDA"], rate)
    values.extend(peak_features(phasic, 1.0 / rate))
    values.extend(peak_features(tonic, 1.0 / rate))
    values.extend(tonic_extras(tonic))
    vec = np.asarray(values, dtype=float)
    bad = ~np.isfinite(vec)
    if bad.any():
        if tally is not None:
            tally.replaced.update(FEATURE_NAMES[i] for i in np.flatnonzero(bad))
        vec[bad] = 0.0
    return vec


@dataclass
class FeatureTable:
    """Feature matrix with per-row shift keys, coverage and labels."""

    X: np.ndarray
    labels: np.ndarray
    coverage_s: np.ndarray
    keys: list
    names: tuple = FEATURE_NAMES

    def __len__(self):
        return len(self.labels)

    def subset(self, index) -> "FeatureTable":
        index = np.asarray(index)
        if index.dtype == bool:
            index = np.flatnonzero(index)
        return FeatureTable(
            self.X[index], self.labels[index], self.coverage_s[index], [self.keys[i] for i in index], self.names
        )

    @classmethod
    def from_rows(cls, rows: Iterable[tuple]) -> "FeatureTable":
        """Build from ``(key, coverage_s, label, vector)`` tuples."""
        rows = list(rows)
        if not rows:
            return cls(np.empty((0, N_FEATURES)), np.empty(0, dtype=int), np.empty(0), [])
        keys, cov, lab, vecs = zip(*rows)
        return cls(np.vstack(vecs), np.asarray(lab, dtype=int), np.asarray(cov, dtype=float), list(keys))

    def write_csv(self, path) -> None:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(list(KEY_COLUMNS) + list(self.names))
            for key, cov, lab, row in zip(self.keys, self.coverage_s, self.labels, self.X):
                pid, day, kind = key
                w.writerow([pid, day.isoformat(), kind, repr(float(cov)), int(lab)] + [repr(float(v)) for v in row])

    @classmethod
    def read_csv(cls, path) -> "FeatureTable":
        from datetime import date

        rows = []
        with open(path, newline="", encoding="utf-8") as fh:
            reader = csv.reader(fh)
            header = next(reader)
            names = tuple(header[len(KEY_COLUMNS) :])
            for r in reader:
                if not r:
                    continue
                key = (r[0], date.fromisoformat(r[1]), r[2])
                rows.append((key, float(r[3]), int(r[4]), np.array([float(v) for v in r[5:]])))
        table = cls.from_rows(rows)
        table.names = names
        return table


def feature_table(shifts: Iterable[ShiftRecord], tally: QualityTally | None = None) -> FeatureTable:
    """Extract features for every shift. Shifts are consumed one at a time,
    so a generator keeps memory flat."""
    return FeatureTable.from_rows((s.key, s.coverage_s, s.label, shift_features(s, tally)) for s in shifts)
