"""Resampling, shift segmentation, duration binning and decimation."""

from __future__ import annotations

import math
from dataclasses import dataclass
from datetime import date, datetime, time, timezone, tzinfo
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .ingest import MODALITIES, SensorStream, SessionData, ShiftLabel, ValidationError

SHIFT_SECONDS = 8 * 3600
HOUR = 3600


@dataclass(frozen=True)
class ShiftWindow:
    """Half-open local clock window ``[start, end)``."""

    shift_kind: str
    start: time
    end: time

    def bounds(self, day: date, tz: tzinfo = timezone.utc) -> tuple[float, float]:
        lo = datetime.combine(day, self.start, tzinfo=tz).timestamp()
        hi = datetime.combine(day, self.end, tzinfo=tz).timestamp()
        return lo, hi

    @property
    def length_s(self) -> int:
        return (self.end.hour - self.start.hour) * 3600 + (self.end.minute - self.start.minute) * 60


# The 15:00-15:01 minute belongs to neither window so no shift can exceed 8 h.
SHIFT_WINDOWS = {
    "Morning": ShiftWindow("Morning", time(7, 0), time(15, 0)),
    "Evening": ShiftWindow("Evening", time(15, 1), time(23, 0)),
}


@dataclass(frozen=True, eq=False)
class ShiftRecord:
    """Aligned per-modality series for one labelled nursing shift."""

    participant_id: str
    date: date
    shift_kind: str
    label: int
    series: dict
    common_rate_hz: float
    coverage_s: float

    def __post_init__(self):
        if self.label not in (0, 1):
            raise ValidationError(f"label must be 0 or 1, got {self.label!r}")
        if not 0 < self.coverage_s <= SHIFT_SECONDS:
            raise ValidationError(f"coverage {self.coverage_s} s outside (0, {SHIFT_SECONDS}]")
        lengths = {len(v) for v in self.series.values()}
        if len(lengths) != 1:
            raise ValidationError(f"modalities are not aligned: lengths {sorted(lengths)}")

    @property
    def key(self) -> tuple[str, date, str]:
        return (self.participant_id, self.date, self.shift_kind)

    @property
    def n_samples(self) -> int:
        return len(next(iter(self.series.values())))


def resample(stream: SensorStream, target_hz: float) -> SensorStream:
    """Upsample ``stream`` to ``target_hz`` by linear interpolation.

    The output spans the same interval ``[start, start + n / rate)``; points
    past the last native sample hold its value.
    """
    if target_hz < stream.rate_hz:
        raise ValueError(
            f"target rate {target_hz} Hz is below native {stream.rate_hz} Hz; use decimate to downsample"
        )
    if target_hz == stream.rate_hz:
        return stream
    n = len(stream)
    m = int(round(n * target_hz / stream.rate_hz))
    # positions in native-sample units
    pos = np.arange(m) * (stream.rate_hz / target_hz)
    knots = np.arange(n, dtype=float)
    x = stream.samples
    if x.ndim == 1:
        out = np.interp(pos, knots, x)
    else:
        out = np.column_stack([np.interp(pos, knots, x[:, k]) for k in range(x.shape[1])])
    return SensorStream(stream.modality, stream.start_time, float(target_hz), out)


def acc_magnitude(axes) -> np.ndarray:
    """Euclidean norm of three accelerometer axes, sample by sample.

    ``axes`` is an ``ACC`` :class:`SensorStream`, an ``(n, 3)`` array, or
    three sequences ``(x, y, z)``.
    """
    if isinstance(axes, SensorStream):
        arr = axes.samples
    elif isinstance(axes, np.ndarray) and axes.ndim == 2 and axes.shape[1] == 3:
        arr = axes
    else:
        cols = [np.asarray(a, dtype=float) for a in axes]
        if len(cols) != 3:
            raise ValueError(f"expected 3 axes, got {len(cols)}")
        if len({c.shape for c in cols}) != 1:
            raise ValueError(f"axis lengths differ: {[len(c) for c in cols]}")
        arr = np.column_stack(cols)
    return np.sqrt(np.einsum("ij,ij->i", arr, arr))


def common_rate(sessions: Iterable[SessionData]) -> float:
    """Highest native rate among all streams present."""
    return max(s.rate_hz for sess in sessions for s in sess.streams.values())


def _scalar_streams(session: SessionData, target_hz: float) -> dict[str, tuple[int, np.ndarray]]:
    out = {}
    for modality, stream in session.streams.items():
        s = resample(stream, target_hz)
        values = acc_magnitude(s) if modality == "ACC" else s.samples
        out[modality] = (s.start_time, values)
    return out


def segment_shifts(
    sessions: SessionData | Sequence[SessionData],
    labels: Iterable[ShiftLabel],
    target_hz: float | None = None,
    tz: tzinfo = timezone.utc,
) -> list[ShiftRecord]:
    """Cut recordings of one participant-day into labelled shift records.

    ``sessions`` may be several recording segments of the same participant
    and day; the in-window parts are concatenated in start-time order, so
    gaps inside a shift are closed and coverage counts sampled time only.
    Within a segment all modalities are trimmed to their common span. Shifts
    with no data, or where a modality is missing, are left out.
    """
    if isinstance(sessions, SessionData):
        sessions = [sessions]
    sessions = sorted(sessions, key=lambda s: s.start_time)
    if not sessions:
        return []
    keys = {(s.participant_id, s.session_date) for s in sessions}
    if len(keys) != 1:
        raise ValueError(f"segment_shifts expects one participant-day, got {sorted(keys)}")
    pid, day = keys.pop()
    if target_hz is None:
        target_hz = common_rate(sessions)

    # only segments carrying every modality can be aligned
    prepared = [_scalar_streams(s, target_hz) for s in sessions if set(s.streams) == set(MODALITIES)]

    records = []
    for lab in labels:
        if (lab.participant_id, lab.date) != (pid, day):
            continue
        lo, hi = SHIFT_WINDOWS[lab.shift_kind].bounds(day, tz)
        pieces = {m: [] for m in MODALITIES}
        for streams in prepared:
            a = max([lo] + [st for st, _ in streams.values()])
            b = min([hi] + [st + len(v) / target_hz for st, v in streams.values()])
            if b <= a:
                continue
            n = int(math.floor((b - a) * target_hz + 1e-9))
            offsets = {m: int(math.ceil((a - st) * target_hz - 1e-9)) for m, (st, _) in streams.items()}
            n = min([n] + [len(streams[m][1]) - offsets[m] for m in MODALITIES])
            if n <= 0:
                continue
            for m in MODALITIES:
                i0 = offsets[m]
                pieces[m].append(streams[m][1][i0 : i0 + n])
        if not pieces["ACC"]:
            continue
        series = {m: np.concatenate(pieces[m]) for m in MODALITIES}
        n_total = len(series["ACC"])
        records.append(
            ShiftRecord(pid, day, lab.shift_kind, lab.agitation, series, float(target_hz), n_total / target_hz)
        )
    return records


def bin_index(coverage_s: float) -> int:
    """Duration bin 1..8; bin k holds coverage in ((k-1) h, k h]."""
    if not 0 < coverage_s <= SHIFT_SECONDS:
        raise ValueError(f"coverage {coverage_s} s outside (0, {SHIFT_SECONDS}]")
    return int(math.ceil(coverage_s / HOUR))


def bin_histogram(coverages: Iterable[float]) -> list[int]:
    counts = [0] * 8
    for c in coverages:
        counts[bin_index(c) - 1] += 1
    return counts


def filter_by_length(shifts: Sequence, mode: str, threshold_s: float) -> list:
    """Keep shifts by coverage: ``"AtLeast"`` keeps ``>= threshold``, ``"AtMost"`` keeps ``<=``.

    Works on anything with a ``coverage_s`` attribute; order is preserved.
    """
    if threshold_s < 0:
        raise ValueError("threshold must be non-negative")
    if mode == "AtLeast":
        return [s for s in shifts if s.coverage_s >= threshold_s]
    if mode == "AtMost":
        return [s for s in shifts if s.coverage_s <= threshold_s]
    raise ValueError(f"mode must be AtLeast or AtMost, got {mode!r}")


MIN_POINTS = 5


def decimate(shift: ShiftRecord, interval_s: float) -> ShiftRecord | None:
    """Keep one sample per complete ``interval_s`` window (the window's first).

    Returns ``None`` when fewer than ``MIN_POINTS`` samples survive.
    """
    if not 60 <= interval_s <= 3600:
        raise ValueError(f"interval must lie in [60, 3600] s, got {interval_s}")
    step = int(round(interval_s * shift.common_rate_hz))
    if step < 1 or not math.isclose(step, interval_s * shift.common_rate_hz, rel_tol=1e-9):
        raise ValueError(
            f"interval {interval_s} s is not a whole number of samples at {shift.common_rate_hz} Hz"
        )
    k = shift.n_samples // step
    if k < MIN_POINTS:
        return None
    series = {m: v[: k * step : step].copy() for m, v in shift.series.items()}
    return ShiftRecord(
        shift.participant_id,
        shift.date,
        shift.shift_kind,
        shift.label,
        series,
        shift.common_rate_hz / step,
        shift.coverage_s,
    )


def dump_shift(shift: ShiftRecord, directory) -> Path:
    """Debug dump: one comma-separated file per shift, one column per modality."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    path = directory / f"{shift.participant_id}_{shift.date.isoformat()}_{shift.shift_kind}.csv"
    cols = np.column_stack([shift.series[m] for m in MODALITIES])
    header = f"# rate_hz={shift.common_rate_hz!r} label={shift.label} coverage_s={shift.coverage_s!r}\n"
    with open(path, "w", encoding="ascii") as fh:
        fh.write(header + ",".join(MODALITIES) + "\n")
        np.savetxt(fh, cols, delimiter=",", fmt="%.17g")
    return path
