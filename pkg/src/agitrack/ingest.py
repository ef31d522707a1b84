"""Readers for wearable session directories and shift-level manifests.

A session directory holds one comma-separated file per modality
(``ACC.csv``, ``BVP.csv``, ``EDA.csv``, ``TEMP.csv``). Row 1 is the UTC
start time in seconds, row 2 the sampling rate in Hz, and every following
row is one sample. ``ACC`` rows carry three columns (x, y, z in g); header
rows of ``ACC`` may repeat the value once per column.
"""

from __future__ import annotations

import csv
import io
import logging
import math
from dataclasses import dataclass, field
from datetime import date, datetime, timezone, tzinfo
from pathlib import Path
from typing import Iterable

import numpy as np

log = logging.getLogger(__name__)

MODALITIES = ("ACC", "BVP", "EDA", "TEMP")
DEFAULT_RATES = {"ACC": 32.0, "BVP": 64.0, "EDA": 4.0, "TEMP": 4.0}
SHIFT_KINDS = ("Morning", "Evening")
PAS_GROUPS = ("AV", "MA", "AG", "RC")


class IngestError(ValueError):
    """Base class for input problems."""


class ParseError(IngestError):
    """A file could not be parsed; message names file and line."""

    def __init__(self, path, line: int, reason: str):
        self.path = Path(path)
        self.line = line
        super().__init__(f"{self.path}:{line}: {reason}")


class ValidationError(IngestError):
    pass


@dataclass(frozen=True, eq=False)
class SensorStream:
    """One modality's contiguous sample sequence.

    ``samples`` is 1-D, except for ``ACC`` where it has shape ``(n, 3)``.
    """

    modality: str
    start_time: int
    rate_hz: float
    samples: np.ndarray

    def __post_init__(self):
        if self.modality not in MODALITIES:
            raise ValidationError(f"unknown modality {self.modality!r}")
        if not (self.rate_hz > 0 and math.isfinite(self.rate_hz)):
            raise ValidationError(f"{self.modality}: rate must be positive, got {self.rate_hz}")
        samples = np.asarray(self.samples, dtype=float)
        if self.modality == "ACC":
            if samples.ndim != 2 or samples.shape[1] != 3:
                raise ValidationError("ACC needs exactly 3 equal-length axis sequences")
        elif samples.ndim != 1:
            raise ValidationError(f"{self.modality} needs a single sample sequence")
        if samples.shape[0] == 0:
            raise ValidationError(f"{self.modality}: no samples")
        object.__setattr__(self, "samples", samples)

    def __len__(self):
        return self.samples.shape[0]

    @property
    def duration_s(self) -> float:
        return len(self) / self.rate_hz

    @property
    def end_time(self) -> float:
        return self.start_time + self.duration_s

    def same_as(self, other: "SensorStream") -> bool:
        """Bit-for-bit equality of header and samples."""
        return (
            self.modality == other.modality
            and self.start_time == other.start_time
            and self.rate_hz == other.rate_hz
            and self.samples.shape == other.samples.shape
            and self.samples.tobytes() == other.samples.tobytes()
        )


@dataclass
class SessionData:
    participant_id: str
    session_date: date
    streams: dict[str, SensorStream] = field(default_factory=dict)

    @property
    def start_time(self) -> int:
        return min(s.start_time for s in self.streams.values())

    @property
    def end_time(self) -> float:
        return max(s.end_time for s in self.streams.values())


@dataclass(frozen=True)
class ShiftLabel:
    participant_id: str
    date: date
    shift_kind: str
    agitation: int

    @property
    def key(self) -> tuple[str, date, str]:
        return (self.participant_id, self.date, self.shift_kind)


@dataclass(frozen=True)
class PasEntry:
    participant_id: str
    date: date
    shift_kind: str
    # one entry per PAS_GROUPS member, None when missing
    scores: tuple[int | None, int | None, int | None, int | None]

    @property
    def key(self) -> tuple[str, date, str]:
        return (self.participant_id, self.date, self.shift_kind)

    def score(self, group: str) -> int | None:
        return self.scores[PAS_GROUPS.index(group)]


def local_date(utc_seconds: float, tz: tzinfo = timezone.utc) -> date:
    return datetime.fromtimestamp(utc_seconds, tz).date()


# ---------------------------------------------------------------------------
# session directories


def _header_value(path: Path, line_no: int, text: str, what: str, ncols: int) -> float:
    cells = [c.strip() for c in text.split(",") if c.strip()]
    if not cells or len(cells) not in (1, ncols):
        raise ParseError(path, line_no, f"malformed {what} header {text!r}")
    try:
        values = [float(c) for c in cells]
    except ValueError:
        raise ParseError(path, line_no, f"non-numeric {what} header {text!r}") from None
    if any(v != values[0] for v in values) or not math.isfinite(values[0]):
        raise ParseError(path, line_no, f"inconsistent {what} header {text!r}")
    return values[0]


def read_stream(path, modality: str) -> SensorStream:
    """Parse one modality file in the header-plus-samples convention."""
    path = Path(path)
    ncols = 3 if modality == "ACC" else 1
    # splitlines handles \n, \r\n and \r alike
    lines = path.read_text(encoding="ascii").splitlines()
    while lines and not lines[-1].strip():
        lines.pop()
    if len(lines) < 2:
        raise ParseError(path, len(lines) + 1, "missing start-time/rate header")
    start = _header_value(path, 1, lines[0], "start time", ncols)
    if not start.is_integer():
        raise ParseError(path, 1, f"start time must be whole seconds, got {lines[0]!r}")
    rate = _header_value(path, 2, lines[1], "rate", ncols)
    if rate <= 0:
        raise ValidationError(f"{path}: sampling rate must be positive, got {rate:g}")

    body = lines[2:]
    if not body:
        raise ValidationError(f"{path}: no samples after header")
    try:
        samples = np.loadtxt(io.StringIO("\n".join(body)), delimiter=",", dtype=float, ndmin=2)
    except ValueError:
        raise _locate_bad_row(path, body, ncols) from None
    if samples.shape[1] != ncols:
        raise _locate_bad_row(path, body, ncols)
    if ncols == 1:
        samples = samples[:, 0]
    return SensorStream(modality, int(start), rate, samples)


def _locate_bad_row(path: Path, body: list[str], ncols: int) -> ParseError:
    for i, row in enumerate(body):
        cells = row.split(",")
        try:
            if len(cells) != ncols:
                raise ValueError
            [float(c) for c in cells]
        except ValueError:
            return ParseError(path, i + 3, f"expected {ncols} numeric column(s), got {row!r}")
    return ParseError(path, 3, "unreadable sample block")


def parse_session(directory, participant_id: str | None = None, tz: tzinfo = timezone.utc) -> SessionData:
    """Read every modality file present in ``directory``.

    Absent files simply leave that modality out. ``participant_id`` defaults
    to the name of the parent directory (``<root>/<participant>/<session>``).
    """
    directory = Path(directory)
    if not directory.is_dir():
        raise IngestError(f"{directory} is not a directory")
    streams = {}
    for modality in MODALITIES:
        path = directory / f"{modality}.csv"
        if path.exists():
            streams[modality] = read_stream(path, modality)
    if not streams:
        raise IngestError(f"{directory}: no modality files found")
    days = {local_date(s.start_time, tz) for s in streams.values()}
    if len(days) != 1:
        raise ValidationError(f"{directory}: streams start on different days {sorted(days)}")
    pid = participant_id if participant_id is not None else directory.parent.name
    return SessionData(pid, days.pop(), streams)


def _format_row(values) -> str:
    return ",".join(repr(float(v)) for v in values)


def write_session(session: SessionData, directory) -> Path:
    """Write ``session`` in the directory convention read by :func:`parse_session`.

    Samples are written with shortest round-trip float formatting, so
    re-parsing reproduces them bit-for-bit.
    """
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    for modality, stream in session.streams.items():
        ncols = 3 if modality == "ACC" else 1
        head = ",".join([f"{stream.start_time}"] * ncols)
        rate = ",".join([repr(float(stream.rate_hz))] * ncols)
        if ncols == 1:
            body = "\n".join(map(repr, stream.samples.tolist()))
        else:
            body = "\n".join(_format_row(r) for r in stream.samples.tolist())
        (directory / f"{modality}.csv").write_text(f"{head}\n{rate}\n{body}\n", encoding="ascii")
    return directory


def find_session_dirs(root) -> list[Path]:
    """Session directories under ``root``, i.e. those holding modality files."""
    root = Path(root)
    found = {p.parent for m in MODALITIES for p in root.rglob(f"{m}.csv")}
    return sorted(found)


def load_sessions(root, tz: tzinfo = timezone.utc) -> list[SessionData]:
    return [parse_session(d, tz=tz) for d in find_session_dirs(root)]


def group_sessions(sessions: Iterable[SessionData]) -> dict[tuple[str, date], list[SessionData]]:
    """Group by (participant, date); each group is ordered by start time.

    Overlapping recordings of the same modality within a group raise
    :class:`ValidationError`.
    """
    groups: dict[tuple[str, date], list[SessionData]] = {}
    for s in sessions:
        groups.setdefault((s.participant_id, s.session_date), []).append(s)
    for key, members in groups.items():
        members.sort(key=lambda s: s.start_time)
        for modality in MODALITIES:
            spans = sorted(
                (m.streams[modality].start_time, m.streams[modality].end_time)
                for m in members
                if modality in m.streams
            )
            for (_, prev_end), (start, _) in zip(spans, spans[1:]):
                if start < prev_end:
                    raise ValidationError(f"overlapping {modality} recordings for {key[0]} on {key[1]}")
    return groups


# ---------------------------------------------------------------------------
# manifests


def _parse_kind(text: str, path, row_no: int) -> str:
    kind = text.strip().capitalize()
    if kind not in SHIFT_KINDS:
        raise ParseError(path, row_no, f"shift_kind must be Morning or Evening, got {text!r}")
    return kind


def _parse_date(text: str, path, row_no: int) -> date:
    try:
        return date.fromisoformat(text.strip())
    except ValueError:
        raise ParseError(path, row_no, f"bad ISO date {text!r}") from None


def _rows(path, required: Iterable[str]):
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        missing = set(required) - set(reader.fieldnames or ())
        if missing:
            raise ParseError(path, 1, f"missing column(s) {sorted(missing)}")
        # header is line 1
        for i, row in enumerate(reader, start=2):
            if not any((v or "").strip() for v in row.values()):
                continue
            yield i, row


def load_label_manifest(path) -> list[ShiftLabel]:
    out, seen = [], {}
    for row_no, row in _rows(path, ("participant_id", "date", "shift_kind", "agitation")):
        value = row["agitation"].strip()
        if value not in ("0", "1"):
            raise ParseError(path, row_no, f"agitation must be 0 or 1, got {value!r}")
        label = ShiftLabel(
            row["participant_id"].strip(),
            _parse_date(row["date"], path, row_no),
            _parse_kind(row["shift_kind"], path, row_no),
            int(value),
        )
        if label.key in seen:
            raise ParseError(path, row_no, f"duplicate shift key {label.key} (first on line {seen[label.key]})")
        seen[label.key] = row_no
        out.append(label)
    return out


def write_label_manifest(labels: Iterable[ShiftLabel], path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["participant_id", "date", "shift_kind", "agitation"])
        for lab in labels:
            w.writerow([lab.participant_id, lab.date.isoformat(), lab.shift_kind, lab.agitation])


def load_pas_manifest(path) -> list[PasEntry]:
    """Read PAS scores; empty cells are kept as ``None``."""
    out = []
    for row_no, row in _rows(path, ("participant_id", "date", "shift_kind") + PAS_GROUPS):
        scores = []
        for group in PAS_GROUPS:
            cell = (row[group] or "").strip()
            if not cell:
                scores.append(None)
                continue
            try:
                score = int(cell)
            except ValueError:
                raise ParseError(path, row_no, f"{group} score {cell!r} is not an integer") from None
            if not 0 <= score <= 4:
                raise ParseError(path, row_no, f"{group} score {score} outside 0..4")
            scores.append(score)
        out.append(
            PasEntry(
                row["participant_id"].strip(),
                _parse_date(row["date"], path, row_no),
                _parse_kind(row["shift_kind"], path, row_no),
                tuple(scores),
            )
        )
    fractions = pas_missing_fractions(out)
    log.info("PAS missing fractions: %s", ", ".join(f"{g}={f:.4f}" for g, f in fractions.items()))
    return out


def pas_missing_fractions(entries: list[PasEntry]) -> dict[str, float]:
    if not entries:
        return {g: 0.0 for g in PAS_GROUPS}
    return {g: sum(e.score(g) is None for e in entries) / len(entries) for g in PAS_GROUPS}


def write_pas_manifest(entries: Iterable[PasEntry], path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["participant_id", "date", "shift_kind", *PAS_GROUPS])
        for e in entries:
            w.writerow([e.participant_id, e.date.isoformat(), e.shift_kind, *("" if s is None else s for s in e.scores)])
