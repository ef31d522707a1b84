"""
Per-shift features
==================

Each shift becomes a fixed 49-wide vector: basic statistics for every
modality plus the tonic and phasic parts of EDA.
"""

# %%
import numpy as np

from agitrack.features import FEATURE_NAMES, QualityTally, basic_stats, decompose_eda, feature_table
from agitrack.pipeline import iter_shift_records
from agitrack.synthcohort import CohortConfig, generate_cohort

print(len(FEATURE_NAMES), "features, e.g.", FEATURE_NAMES[:3], "...", FEATURE_NAMES[-2:])

# %%
# Basic statistics on a toy series. A single jump counts as abrupt changes
# on both of its sides.
stats = basic_stats(np.array([0, 0, 0, 10, 0, 0, 0, 0], dtype=float), rate_hz=1.0)
print(stats)

# %%
# The EDA split: a moving-average tonic level and the residual phasic part.
t = np.arange(0, 600, 0.25)
eda = 2 + 0.001 * t + 0.3 * np.exp(-((t - 300) / 4) ** 2)
parts = decompose_eda(eda, rate_hz=4.0)
print("phasic peak near", t[np.argmax(parts.phasic)], "s")
print("tonic + phasic reproduces input:", np.allclose(parts.tonic + parts.phasic, eda))

# %%
# A whole table from a synthetic cohort. Non-finite values are replaced by
# zero and counted.
cohort = generate_cohort(CohortConfig(n_shifts=10, rates={"ACC": 0.5, "BVP": 1.0, "EDA": 0.5, "TEMP": 0.5}, seed=2))
tally = QualityTally()
table = feature_table(iter_shift_records(cohort.sessions.by_day(), cohort.labels, 1.0), tally)
print(table.X.shape, "replaced values:", tally.total)
