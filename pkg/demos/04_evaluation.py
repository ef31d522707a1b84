"""
Nested cross-validation
=======================

Hyperparameters are chosen inside each outer training split, and one AUC is
computed on the concatenated held-out scores.
"""

# %%
import numpy as np

from agitrack.evaluation import nested_cv, roc_auc, roc_curve, stratified_folds
from agitrack.learners import LearnerSpec

# %%
# Folds are stratified: every fold gets the floor or ceiling of its share of
# each class.
y = np.array([1] * 140 + [0] * 553)
plan = stratified_folds(y, 10, seed=0)
print([int(y[plan.split(f)[1]].sum()) for f in range(10)])

# %%
# Ties in the AUC count as one half.
print(roc_auc([0.3, 0.3, 0.7, 0.1], [1, 0, 1, 0]))
print(roc_curve([0.3, 0.3, 0.7, 0.1], [1, 0, 1, 0]))

# %%
rng = np.random.default_rng(3)
labels = np.array([1] * 40 + [0] * 160)
X = rng.standard_normal((200, 8))
X[:, 0] += 1.2 * labels
spec = LearnerSpec("LR", cost_enabled=True, grid=({"lam": 0.1}, {"lam": 1.0}, {"lam": 10.0}))
res = nested_cv(X, labels, spec, k_outer=10, k_inner=5, seed=7)
print(res.summary_line())
print("chosen per fold:", [p["lam"] for p in res.chosen_params])

# %%
# Shuffled labels carry no signal. On small samples nested CV scatters
# widely around 0.5 and often lands below it.
null = nested_cv(X, rng.permutation(labels), spec, 10, 5, seed=7)
print(f"null AUC {null.auc:.3f}")
