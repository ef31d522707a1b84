import math
from datetime import date

import numpy as np
import pytest

from agitrack.experiments import (
    DOWNSAMPLE_SECONDS,
    LSE_MINUTES,
    SSE_MINUTES,
    pas_audit,
    predecimate,
    run_baseline,
    run_downsample,
    run_lse,
    run_sse,
)
from agitrack.ingest import PasEntry, ShiftLabel
from agitrack.learners import LearnerSpec

LEARNERS = [LearnerSpec("LR", c, grid=({"lam": 1.0},)) for c in (False, True)]
CV = dict(k_outer=3, k_inner=2)


def test_grids():
    assert len(LSE_MINUTES) == 17 and LSE_MINUTES[0] == 0 and LSE_MINUTES[-1] == 240
    assert len(SSE_MINUTES) == 17 and SSE_MINUTES[0] == 480 and SSE_MINUTES[-1] == 240
    assert len(DOWNSAMPLE_SECONDS) == 60 and DOWNSAMPLE_SECONDS[-1] == 3600


def test_baseline_rows(pool_table):
    res = run_baseline(pool_table, LEARNERS, seed=3, **CV)
    assert [(r.learner, r.cost) for r in res.rows] == [("LR", False), ("LR", True)]
    assert all(r.n_shifts == 60 and r.n_positive == 15 and r.status == "ok" for r in res.rows)
    assert res.to_csv().splitlines()[0] == "experiment,parameter,learner,cost,auc,n_shifts,n_positive,status"


def test_lse_sse_identity_and_counts(pool_table):
    base = run_baseline(pool_table, LEARNERS, seed=3, **CV)
    lse = run_lse(pool_table, LEARNERS, seed=3, **CV)
    sse = run_sse(pool_table, LEARNERS, seed=3, **CV)
    for res, ident in ((lse, 0), (sse, 480)):
        for spec in LEARNERS:
            rows = res.rows_for("LR", spec.cost_enabled)
            assert len(rows) == 17
            b = base.rows_for("LR", spec.cost_enabled)[0]
            r = [x for x in rows if x.parameter == ident][0]
            assert repr(r.auc) == repr(b.auc) and r.n_shifts == b.n_shifts
    lse_n = [r.n_shifts for r in lse.rows_for("LR", False)]
    sse_n = [r.n_shifts for r in sse.rows_for("LR", False)]
    assert lse_n == sorted(lse_n, reverse=True)
    assert sse_n == sorted(sse_n, reverse=True)


def test_skipped_rows_not_fatal(pool_table):
    res = run_lse(pool_table.subset(np.arange(20)), LEARNERS, seed=0, minutes=(0, 400), **CV)
    status = {r.parameter: r.status for r in res.rows}
    assert status[0] == "ok" and status[400] == "skipped"
    skipped = [r for r in res.rows if r.status == "skipped"]
    assert all(math.isnan(r.auc) for r in skipped)
    assert ",skipped" in res.to_csv()


def test_workers_do_not_change_results(pool_table):
    a = run_sse(pool_table, LEARNERS[:1], seed=1, minutes=(480, 300, 240), **CV)
    b = run_sse(pool_table, LEARNERS[:1], seed=1, minutes=(480, 300, 240), workers=3, **CV)
    assert a.to_csv() == b.to_csv()


def test_downsample_rows_and_discard(shift_pool):
    res = run_downsample(predecimate(shift_pool), LEARNERS[:1], seed=0, **CV)
    rows = res.rows_for("LR", False)
    assert [r.parameter for r in rows] == list(DOWNSAMPLE_SECONDS)
    hourly = rows[-1]
    assert hourly.n_shifts == sum(s.coverage_s >= 5 * 3600 for s in shift_pool)
    counts = [r.n_shifts for r in rows]
    assert counts == sorted(counts, reverse=True)


def test_predecimate_exact(shift_pool):
    from agitrack.features import feature_table
    from agitrack.timebase import decimate

    pre = predecimate(shift_pool)
    for interval in (120, 900, 3600):
        direct = feature_table(d for d in (decimate(s, interval) for s in shift_pool) if d is not None)
        via = feature_table(d for d in (decimate(s, interval) for s in pre) if d is not None)
        assert direct.X.tobytes() == via.X.tobytes()


D = date(2020, 2, 1)


def _lab(i, a):
    return ShiftLabel(f"P{i}", D, "Morning", a)


def test_pas_audit_golden():
    labels = [_lab(i, int(i < 4)) for i in range(10)]
    scores = {
        0: (0, 1, None, 4),
        1: (3, 2, 0, 4),
        2: (4, 4, 1, None),
        3: (None, 0, 0, 3),
        4: (0, 0, 0, 0),
        5: (1, 0, 0, 0),
        6: (0, 3, None, 0),
        7: (0, 0, 0, 0),
        8: (2, 0, 0, 1),
        9: (0, None, 0, 0),
    }
    entries = [PasEntry(f"P{i}", D, "Morning", s) for i, s in scores.items()]
    entries.append(PasEntry("P99", D, "Evening", (0, 0, 0, 0)))
    audit = pas_audit(entries, labels).pas
    assert audit.histograms[("AV", "agitation")] == [1, 0, 0, 1, 1]
    assert audit.histograms[("MA", "agitation")] == [1, 1, 1, 0, 1]
    assert audit.histograms[("RC", "agitation")] == [0, 0, 0, 1, 2]
    assert audit.histograms[("AV", "non_agitation")] == [4, 1, 1, 0, 0]
    assert audit.histograms[("MA", "non_agitation")] == [4, 0, 0, 1, 0]
    assert audit.missing[("AV", "agitation")] == 1
    assert audit.missing[("AG", "non_agitation")] == 1
    assert audit.missing[("MA", "non_agitation")] == 1
    assert audit.underreport["AV"] == pytest.approx(1 / 3)
    assert audit.underreport["MA"] == pytest.approx(3 / 4)
    assert audit.underreport["RC"] == 0.0
    assert audit.unjoined == 1


def test_pas_audit_all_low_ma():
    labels = [_lab(i, 1) for i in range(5)]
    entries = [PasEntry(f"P{i}", D, "Morning", (4, i % 3, 4, 4)) for i in range(5)]
    assert pas_audit(entries, labels).pas.underreport["MA"] == 1.0


def test_pas_audit_empty_join():
    res = pas_audit([PasEntry("X", D, "Morning", (1, 1, 1, 1))], [_lab(0, 1)])
    assert all(sum(h) == 0 for h in res.pas.histograms.values())
    assert res.pas.unjoined == 1
    assert res.to_csv().splitlines()[0].startswith("group,shift_class,score_0")
