from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class CostMatrix:
    """Misclassification penalties with a zero diagonal.

    ``c_fn`` is charged for predicting 0 on a true 1, ``c_fp`` for
    predicting 1 on a true 0.
    """

    c_fn: float = 1.0
    c_fp: float = 1.0

    def __post_init__(self):
        if not (self.c_fn > 0 and self.c_fp > 0):
            raise ValueError(f"costs must be positive, got c_fn={self.c_fn}, c_fp={self.c_fp}")

    def as_array(self) -> np.ndarray:
        """Rows are true class (0, 1), columns predicted class."""
        return np.array([[0.0, self.c_fp], [self.c_fn, 0.0]])

    def sample_weights(self, y) -> np.ndarray:
        y = np.asarray(y)
        return np.where(y == 1, self.c_fn, self.c_fp).astype(float)


UNIT_COST = CostMatrix(1.0, 1.0)


def compute_cost_matrix(labels) -> CostMatrix:
    """Cost matrix from the positive share ``w`` of ``labels``:
    ``c_fn = 1 / w`` and ``c_fp = 1 / (1 - w)``."""
    y = np.asarray(labels)
    n = y.size
    n_pos = int(np.count_nonzero(y == 1))
    if n == 0 or n_pos in (0, n):
        raise ValueError("cost matrix needs both classes present")
    # 1 / (n_pos / n) written as n / n_pos to keep the exact quotient
    return CostMatrix(c_fn=n / n_pos, c_fp=n / (n - n_pos))
