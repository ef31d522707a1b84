"""
Recordings to shift records
===========================

A small synthetic cohort is written to disk in the wearable's per-session
directory layout, parsed back, and cut into Morning and Evening shifts on a
common timebase.
"""

# %%
# Write a tiny cohort. Low sample rates keep the files small.
import tempfile
from pathlib import Path

from agitrack.ingest import load_label_manifest, load_sessions, parse_session
from agitrack.synthcohort import CohortConfig, generate_cohort, write_cohort
from agitrack.pipeline import iter_shift_records
from agitrack.timebase import bin_histogram, decimate

rates = {"ACC": 0.5, "BVP": 1.0, "EDA": 0.25, "TEMP": 0.25}
root = Path(tempfile.mkdtemp()) / "cohort"
write_cohort(generate_cohort(CohortConfig(n_shifts=12, rates=rates, seed=1)), root)
labels = load_label_manifest(root / "labels.csv")
print(len(labels), "labelled shifts,", sum(l.agitation for l in labels), "with agitation")

# %%
# One session directory holds a CSV per modality. ACC keeps its three axes.
first = sorted((root / "sessions").glob("*/*"))[0]
session = parse_session(first)
for name, stream in session.streams.items():
    print(f"{name:4s} {stream.rate_hz:5.2f} Hz  {stream.samples.shape}")

# %%
# Segment each participant-day. All modalities are linearly resampled to one
# rate and ACC is reduced to its magnitude.
# Sessions from the same participant-day are merged before cutting.
shifts = list(iter_shift_records([load_sessions(root / "sessions")], labels, target_hz=1.0))
for sh in shifts[:4]:
    print(sh.key, sh.label, f"{sh.coverage_s / 3600:.2f} h", sh.n_samples, "samples")

# %%
# Coverage histogram over the eight one-hour bins.
print(bin_histogram(sh.coverage_s for sh in shifts))

# %%
# Decimation keeps one sample per complete interval and drops shifts left
# with fewer than five points.
for interval in (60, 1800, 3600):
    kept = [d for d in (decimate(sh, interval) for sh in shifts) if d is not None]
    print(f"{interval:5d} s: {len(kept)} of {len(shifts)} shifts kept")
