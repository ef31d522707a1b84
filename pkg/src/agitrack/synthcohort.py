"""Synthetic cohort with known agitation episodes.

Every shift is generated from its own seed, so sessions can be produced
lazily and in any order. Episode timings are returned separately from the
label manifest; the classification pipeline never sees them.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field, replace
from datetime import date, datetime, time, timedelta, timezone, tzinfo
from pathlib import Path
from typing import Iterator, Sequence

import numpy as np
from scipy import stats
from scipy.signal import fftconvolve

from .ingest import (
    DEFAULT_RATES,
    MODALITIES,
    PasEntry,
    SensorStream,
    SessionData,
    ShiftLabel,
    write_label_manifest,
    write_pas_manifest,
    write_session,
)
from .timebase import HOUR, SHIFT_WINDOWS, bin_histogram

# reference cohort: shifts per 1-hour coverage bin
REFERENCE_BIN_COUNTS = (9, 15, 77, 118, 151, 131, 82, 110)
DESK_RATES = {m: r / 8 for m, r in DEFAULT_RATES.items()}

# per effect size: ACC noise sigma (g), BVP frequency boost (Hz),
# extra EDA responses per minute, EDA response amplitude range (uS)
EFFECTS = {
    "none": None,
    "small": dict(acc_sigma=0.06, bvp_boost=0.05, eda_rate=0.15, eda_amp=(0.05, 0.2)),
    "large": dict(acc_sigma=0.6, bvp_boost=0.6, eda_rate=2.0, eda_amp=(0.3, 1.0)),
}


class CohortConfigError(ValueError):
    pass


@dataclass(frozen=True)
class CohortConfig:
    n_shifts: int = 693
    positive_ratio: float = 0.202
    bin_probs: tuple = tuple(c / sum(REFERENCE_BIN_COUNTS) for c in REFERENCE_BIN_COUNTS)
    rates: dict = field(default_factory=lambda: dict(DESK_RATES))
    effect_size: str = "large"
    episode_minutes: tuple = (1.0, 180.0)
    min_coverage_s: float = 900.0
    n_participants: int = 20
    start_date: date = date(2018, 1, 1)
    seed: int = 0
    tz: tzinfo = timezone.utc

    def __post_init__(self):
        if self.n_shifts < 1:
            raise CohortConfigError("n_shifts must be at least 1")
        if not 0 < self.positive_ratio < 1:
            raise CohortConfigError("positive_ratio must lie in (0, 1)")
        if len(self.bin_probs) != 8 or min(self.bin_probs) < 0 or not np.isclose(sum(self.bin_probs), 1.0):
            raise CohortConfigError("bin_probs must be 8 non-negative values summing to 1")
        lo, hi = self.episode_minutes
        if not 0 < lo <= hi <= 480:
            raise CohortConfigError("episode duration range must lie within (0, 480] minutes")
        if self.effect_size not in EFFECTS:
            raise CohortConfigError(f"effect_size must be one of {sorted(EFFECTS)}")
        if set(self.rates) != set(MODALITIES) or min(self.rates.values()) <= 0:
            raise CohortConfigError("rates needs a positive value for every modality")
        if lo * 60 > self.min_coverage_s:
            raise CohortConfigError(
                f"shortest episode ({lo} min) exceeds the shortest coverage ({self.min_coverage_s} s)"
            )
        if self.n_participants < 1:
            raise CohortConfigError("n_participants must be at least 1")

    @classmethod
    def full_rate(cls, **kw) -> "CohortConfig":
        return cls(rates=dict(DEFAULT_RATES), **kw)

    @property
    def n_positive(self) -> int:
        return int(round(self.n_shifts * self.positive_ratio))

    @property
    def quantum_s(self) -> int:
        """Coverage granularity: whole seconds holding a whole number of
        samples at every rate."""
        q = 1
        while any(not float(q * r).is_integer() for r in self.rates.values()):
            q += 1
        return q


@dataclass(frozen=True)
class EpisodeRecord:
    participant_id: str
    date: date
    shift_kind: str
    start_offset_s: float
    duration_s: float

    @property
    def key(self):
        return (self.participant_id, self.date, self.shift_kind)


@dataclass(frozen=True)
class ShiftPlan:
    index: int
    label: ShiftLabel
    start_time: int
    coverage_s: int
    episodes: tuple


def _shift_rng(seed: int, index: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([seed, index]))


def _plan(config: CohortConfig) -> list[ShiftPlan]:
    rng = np.random.default_rng(np.random.SeedSequence([config.seed, 2**31 - 1]))
    positive = np.zeros(config.n_shifts, dtype=bool)
    positive[rng.choice(config.n_shifts, config.n_positive, replace=False)] = True
    q = config.quantum_s
    lo_ep, hi_ep = (m * 60 for m in config.episode_minutes)
    plans = []
    for i in range(config.n_shifts):
        r = _shift_rng(config.seed, i)
        pid = f"P{(i // 2) % config.n_participants:02d}"
        day = config.start_date + timedelta(days=(i // 2) // config.n_participants)
        kind = "Morning" if i % 2 == 0 else "Evening"
        window = SHIFT_WINDOWS[kind]
        k = int(r.choice(8, p=config.bin_probs)) + 1
        lo_cov = max((k - 1) * HOUR, config.min_coverage_s - 1)
        hi_cov = min(k * HOUR, window.length_s)
        # whole quanta in (lo_cov, hi_cov]
        n_lo, n_hi = int(lo_cov // q) + 1, int(hi_cov // q)
        if n_hi < n_lo:
            n_lo = n_hi
        coverage = int(r.integers(n_lo, n_hi + 1)) * q
        offset = int(r.integers(0, (window.length_s - coverage) // q + 1)) * q
        midnight = datetime.combine(day, time(0), tzinfo=config.tz).timestamp()
        start = int(midnight + window.start.hour * 3600 + window.start.minute * 60 + offset)
        episodes = []
        if positive[i]:
            for _ in range(int(r.integers(1, 3))):
                dur = float(r.uniform(lo_ep, min(hi_ep, coverage)))
                st = float(r.uniform(0, coverage - dur))
                episodes.append(EpisodeRecord(pid, day, kind, st, dur))
        plans.append(ShiftPlan(i, ShiftLabel(pid, day, kind, int(positive[i])), start, coverage, tuple(episodes)))
    return plans


def _mask(n: int, rate: float, spans) -> np.ndarray:
    m = np.zeros(n, dtype=bool)
    for st, dur in spans:
        m[int(st * rate) : int(np.ceil((st + dur) * rate))] = True
    return m


def _smooth_walk(r, n, step_sd, width):
    walk = np.cumsum(r.normal(0.0, step_sd, n))
    if width > 1:
        kern = np.ones(width) / width
        walk = fftconvolve(walk, kern, mode="same")
    return walk


def _responses(r, n, rate, per_minute, amp_range, where=None):
    """Skin-conductance responses: impulse train convolved with a
    bi-exponential (rise 2 s, decay 10 s)."""
    impulses = np.zeros(n)
    expected = per_minute * (n / rate) / 60.0 if where is None else per_minute * where.sum() / rate / 60.0
    count = r.poisson(expected)
    if count:
        candidates = np.arange(n) if where is None else np.flatnonzero(where)
        if len(candidates):
            at = r.choice(candidates, count)
            np.add.at(impulses, at, r.uniform(*amp_range, count))
    t = np.arange(int(60 * rate) + 1) / rate
    kern = np.exp(-t / 10.0) - np.exp(-t / 2.0)
    kern /= kern.max()
    return fftconvolve(impulses, kern)[:n]


def generate_session(config: CohortConfig, plan: ShiftPlan) -> SessionData:
    """Recording covering one shift's sensors-shift interval."""
    r = _shift_rng(config.seed, plan.index + 10**6)
    effect = EFFECTS[config.effect_size]
    spans = [(e.start_offset_s, e.duration_s) for e in plan.episodes] if effect else []
    streams = {}
    # values are rounded to sensor-like resolution so files stay compact

    rate = config.rates["ACC"]
    n = int(plan.coverage_s * rate)
    # resting level and motion habits differ from shift to shift
    sigma = np.full(n, r.uniform(0.01, 0.05))
    bout_spans = []
    for _ in range(r.poisson(r.uniform(0.5, 4.0) * plan.coverage_s / HOUR)):
        dur = r.uniform(20, 300)
        bout_spans.append((r.uniform(0, max(plan.coverage_s - dur, 0)), dur))
    bouts = _mask(n, rate, bout_spans)
    sigma[bouts] = np.maximum(sigma[bouts], r.uniform(0.08, 0.2))
    if spans:
        ep = _mask(n, rate, spans)
        sigma[ep] = np.maximum(sigma[ep], effect["acc_sigma"])
    g = r.normal(size=3)
    g /= np.linalg.norm(g)
    streams["ACC"] = SensorStream("ACC", plan.start_time, rate, np.round(g + sigma[:, None] * r.normal(size=(n, 3)), 4))

    rate = config.rates["BVP"]
    n = int(plan.coverage_s * rate)
    freq = np.full(n, r.uniform(1.0, 1.5))
    if spans:
        freq[_mask(n, rate, spans)] += effect["bvp_boost"]
    phase = 2 * np.pi * np.cumsum(freq) / rate
    bvp = r.uniform(30, 80) * np.sin(phase) + r.normal(0, 5.0, n)
    streams["BVP"] = SensorStream("BVP", plan.start_time, rate, np.round(bvp, 2))

    rate = config.rates["EDA"]
    n = int(plan.coverage_s * rate)
    level = r.uniform(0.5, 5.0) + r.uniform(-0.3, 0.3) * np.arange(n) / max(n, 1)
    level = level + _smooth_walk(r, n, 0.004, max(1, int(120 * rate)))
    eda = level + _responses(r, n, rate, 0.1, (0.05, 0.2))
    if spans:
        eda += _responses(r, n, rate, effect["eda_rate"], effect["eda_amp"], _mask(n, rate, spans))
    eda += r.normal(0, 0.002, n)
    streams["EDA"] = SensorStream("EDA", plan.start_time, rate, np.round(np.maximum(eda, 0.01), 6))

    rate = config.rates["TEMP"]
    n = int(plan.coverage_s * rate)
    temp = 33.0 + r.uniform(-1, 1) + _smooth_walk(r, n, 0.002, max(1, int(300 * rate)))
    streams["TEMP"] = SensorStream("TEMP", plan.start_time, rate, np.round(temp, 2))

    return SessionData(plan.label.participant_id, plan.label.date, streams)


class LazySessions(Sequence):
    """Sessions generated on access; nothing is cached."""

    def __init__(self, config: CohortConfig, plans: list[ShiftPlan]):
        self.config = config
        self.plans = plans

    def __len__(self):
        return len(self.plans)

    def __getitem__(self, i):
        if isinstance(i, slice):
            return [self[j] for j in range(*i.indices(len(self)))]
        return generate_session(self.config, self.plans[i])

    def by_day(self) -> Iterator[list[SessionData]]:
        """Sessions grouped by participant-day, in plan order."""
        group, key = [], None
        for plan in self.plans:
            k = (plan.label.participant_id, plan.label.date)
            if group and k != key:
                yield group
                group = []
            key = k
            group.append(generate_session(self.config, plan))
        if group:
            yield group


@dataclass
class Cohort:
    config: CohortConfig
    sessions: LazySessions
    labels: list[ShiftLabel]
    episodes: list[EpisodeRecord]

    def __iter__(self):
        # unpacks as (sessions, labels, episodes)
        return iter((self.sessions, self.labels, self.episodes))


def generate_cohort(config: CohortConfig) -> Cohort:
    plans = _plan(config)
    episodes = [e for p in plans for e in p.episodes]
    return Cohort(config, LazySessions(config, plans), [p.label for p in plans], episodes)


@dataclass
class CohortReport:
    violations: list[str]
    bin_counts: list[int]
    chi2_pvalue: float

    @property
    def ok(self) -> bool:
        return not self.violations


def verify_cohort(sessions, labels, episodes, config: CohortConfig | None = None) -> CohortReport:
    """Check label/episode consistency, stream rates and the coverage-bin
    distribution (chi-square goodness of fit against ``config``)."""
    config = config or getattr(sessions, "config", None) or CohortConfig()
    violations = []
    with_episode = {e.key for e in episodes}
    for lab in labels:
        if lab.agitation != int(lab.key in with_episode):
            violations.append(f"{lab.key}: label {lab.agitation} but {int(lab.key in with_episode)} episode(s)")
    for key in with_episode - {lab.key for lab in labels}:
        violations.append(f"{key}: episode without a labelled shift")

    coverages = []
    for s in sessions:
        for m, stream in s.streams.items():
            if stream.rate_hz != config.rates[m]:
                violations.append(f"{s.participant_id} {s.session_date} {m}: rate {stream.rate_hz} != {config.rates[m]}")
        coverages.append(min(st.duration_s for st in s.streams.values()))
    counts = bin_histogram(coverages)
    probs = np.asarray(config.bin_probs)
    used = probs > 0
    expected = probs[used] * len(coverages)
    pvalue = float(stats.chisquare(np.asarray(counts)[used], expected).pvalue) if len(coverages) else 1.0
    return CohortReport(violations, counts, pvalue)


def synthetic_pas(labels, seed: int = 0, missing: float = 0.15, ma_below3_on_agitation: float = 0.56) -> list[PasEntry]:
    """PAS scores resembling under-reported nursing charts: low scores on
    calm shifts, and on agitation shifts MA below 3 at the given rate."""
    rng = np.random.default_rng(seed)
    out = []
    for lab in labels:
        scores = []
        for g in ("AV", "MA", "AG", "RC"):
            if rng.random() < missing:
                scores.append(None)
            elif lab.agitation and g == "MA":
                low = rng.random() < ma_below3_on_agitation
                scores.append(int(rng.integers(0, 3)) if low else int(rng.integers(3, 5)))
            elif lab.agitation:
                scores.append(int(rng.choice(5, p=[0.35, 0.3, 0.2, 0.1, 0.05])))
            else:
                scores.append(int(rng.choice(5, p=[0.7, 0.2, 0.07, 0.02, 0.01])))
        out.append(PasEntry(lab.participant_id, lab.date, lab.shift_kind, tuple(scores)))
    return out


def write_episodes(episodes, path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["participant_id", "date", "shift_kind", "start_offset_s", "duration_s"])
        for e in episodes:
            w.writerow([e.participant_id, e.date.isoformat(), e.shift_kind, repr(e.start_offset_s), repr(e.duration_s)])


def write_cohort(cohort: Cohort, root, pas: bool = True) -> Path:
    """Write ``<root>/sessions/<participant>/<date>_<shift>/`` trees plus
    ``labels.csv``, ``pas.csv`` and the hidden ``episodes.csv``."""
    root = Path(root)
    for plan in cohort.sessions.plans:
        lab = plan.label
        session = generate_session(cohort.config, plan)
        write_session(session, root / "sessions" / lab.participant_id / f"{lab.date.isoformat()}_{lab.shift_kind}")
    write_label_manifest(cohort.labels, root / "labels.csv")
    write_episodes(cohort.episodes, root / "episodes.csv")
    if pas:
        write_pas_manifest(synthetic_pas(cohort.labels, cohort.config.seed), root / "pas.csv")
    return root


def with_effect(config: CohortConfig, effect_size: str) -> CohortConfig:
    return replace(config, effect_size=effect_size)
