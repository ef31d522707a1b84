"""
Cost-sensitive learners
=======================

Logistic regression, a random forest and an RBF support vector machine, each
trained with class costs derived from the positive share of the labels.
"""

# %%
import numpy as np

from agitrack.evaluation import roc_auc
from agitrack.learners import compute_cost_matrix, fit, predict_scores

rng = np.random.default_rng(0)
y = (rng.random(300) < 0.2).astype(int)
X = rng.standard_normal((300, 6))
X[:, 0] += 1.5 * y
X[:, 1] += np.where(y == 1, X[:, 2] ** 2, 0)

cost = compute_cost_matrix(y)
print(f"c_fn={cost.c_fn:.3f}  c_fp={cost.c_fp:.3f}")
print(cost.as_array())

# %%
# LR and SVM standardize internally with training statistics only.
tr, te = np.arange(150), np.arange(150, 300)
params = {"LR": {"lam": 1.0}, "RF": {"n_trees": 50, "n_predictors": 2}, "SVM": {"box_c": 1.0, "kernel_scale": 3.0}}
for kind, p in params.items():
    model = fit(kind, X[tr], y[tr], p, cost=compute_cost_matrix(y[tr]), seed=1)
    print(f"{kind:3s} held-out AUC {roc_auc(predict_scores(model, X[te]), y[te]):.3f}")
