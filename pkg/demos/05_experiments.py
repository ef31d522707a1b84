"""
Experiment sweeps
=================

Baseline, length-based exclusion (LSE), shift selection (SSE), decimation,
and the PAS under-reporting audit, all on a small synthetic pool.
"""

# %%
from agitrack.experiments import pas_audit, predecimate, run_baseline, run_downsample, run_lse, run_sse
from agitrack.features import feature_table
from agitrack.learners import LearnerSpec
from agitrack.pipeline import iter_shift_records
from agitrack.synthcohort import CohortConfig, generate_cohort, synthetic_pas

config = CohortConfig(n_shifts=60, rates={"ACC": 0.1, "BVP": 0.1, "EDA": 0.1, "TEMP": 0.1}, effect_size="large", seed=5)
cohort = generate_cohort(config)
shifts = list(iter_shift_records(cohort.sessions.by_day(), cohort.labels, 0.1))
table = feature_table(shifts)
learners = [LearnerSpec("LR", cost, grid=({"lam": 1.0},)) for cost in (False, True)]
cv = dict(k_outer=5, k_inner=3)

# %%
print(run_baseline(table, learners, seed=0, **cv).to_csv())

# %%
# LSE drops shifts shorter than b minutes; SSE keeps only shifts up to b.
lse = run_lse(table, learners[:1], seed=0, minutes=(0, 60, 120, 240), **cv)
sse = run_sse(table, learners[:1], seed=0, minutes=(480, 360, 240), **cv)
for row in lse.rows + sse.rows:
    print(row.experiment, row.parameter, row.n_shifts, row.status, row.auc)

# %%
# Decimation to coarser intervals. Pre-decimating to one minute first gives
# identical results and is much cheaper.
down = run_downsample(predecimate(shifts), learners[:1], seed=0, intervals=(60, 600, 3600), **cv)
for row in down.rows:
    print(row.parameter, row.n_shifts, row.auc)

# %%
audit = pas_audit(synthetic_pas(cohort.labels, seed=0), cohort.labels)
print(audit.summary())
