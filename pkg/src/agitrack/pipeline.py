"""Glue from recordings to shift records and feature tables, one
participant-day at a time so memory stays bounded."""

from __future__ import annotations

from collections import defaultdict
from datetime import timezone, tzinfo
from pathlib import Path
from typing import Iterable, Iterator

from .features import FeatureTable, QualityTally, feature_table
from .ingest import ShiftLabel, find_session_dirs, group_sessions, parse_session
from .timebase import ShiftRecord, segment_shifts


def iter_shift_records(
    session_groups: Iterable[list],
    labels: list[ShiftLabel],
    target_hz: float,
    tz: tzinfo = timezone.utc,
) -> Iterator[ShiftRecord]:
    by_day = defaultdict(list)
    for lab in labels:
        by_day[(lab.participant_id, lab.date)].append(lab)
    for group in session_groups:
        if not group:
            continue
        for day_group in group_sessions(group).values():
            key = (day_group[0].participant_id, day_group[0].session_date)
            yield from segment_shifts(day_group, by_day.get(key, []), target_hz, tz)


def iter_directory_groups(root, tz: tzinfo = timezone.utc) -> Iterator[list]:
    """Parsed sessions under ``root``, batched per participant directory."""
    by_parent = defaultdict(list)
    for d in find_session_dirs(root):
        by_parent[d.parent].append(d)
    for parent in sorted(by_parent):
        yield [parse_session(d, tz=tz) for d in by_parent[parent]]


def build_feature_table(
    session_groups: Iterable[list],
    labels: list[ShiftLabel],
    target_hz: float,
    tz: tzinfo = timezone.utc,
    tally: QualityTally | None = None,
) -> FeatureTable:
    return feature_table(iter_shift_records(session_groups, labels, target_hz, tz), tally)
