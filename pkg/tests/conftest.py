from datetime import date

import numpy as np
import pytest

from agitrack.features import feature_table
from agitrack.pipeline import build_feature_table
from agitrack.synthcohort import CohortConfig, generate_cohort
from agitrack.timebase import ShiftRecord


def make_shift(coverage_s, rate=1.0, label=0, seed=0, pid="P1", day=date(2020, 1, 1), kind="Morning", temp=None):
    """ShiftRecord with random aligned series; ``temp`` fixes TEMP to a constant."""
    rng = np.random.default_rng(seed)
    n = int(round(coverage_s * rate))
    series = {
        "ACC": 1.0 + 0.05 * rng.standard_normal(n),
        "BVP": 50 * np.sin(np.arange(n) / max(rate, 1e-9)) + rng.standard_normal(n),
        "EDA": 2.0 + np.cumsum(0.01 * rng.standard_normal(n)),
        "TEMP": np.full(n, temp) if temp is not None else 33 + 0.1 * rng.standard_normal(n),
    }
    return ShiftRecord(pid, day, kind, label, series, rate, coverage_s)


def separable_data(n=60, d=5, seed=0, gap=4.0):
    rng = np.random.default_rng(seed)
    y = np.repeat([0, 1], n // 2)
    X = rng.standard_normal((n, d))
    X[:, 0] += gap * y
    return X, y


@pytest.fixture(scope="session")
def small_cohort():
    config = CohortConfig(n_shifts=40, effect_size="large", seed=11)
    return generate_cohort(config)


@pytest.fixture(scope="session")
def small_table(small_cohort):
    return build_feature_table(small_cohort.sessions.by_day(), small_cohort.labels, 8.0)


@pytest.fixture(scope="session")
def shift_pool():
    """60 short shifts with coverage spread over all eight bins."""
    shifts = []
    for i in range(60):
        cov = 3600 * (1 + i % 8) - 600 * (i % 3)
        shifts.append(make_shift(cov, rate=1 / 60, label=int(i % 4 == 0), seed=i, pid=f"P{i}"))
    return shifts


@pytest.fixture(scope="session")
def pool_table(shift_pool):
    return feature_table(shift_pool)
