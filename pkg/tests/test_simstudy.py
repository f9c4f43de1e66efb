import io
import math

import numpy as np
import pytest

from bootimpute.simstudy import (
    RECORD_COLUMNS,
    BiasRecord,
    ScenarioSpec,
    build_grid,
    format_table,
    read_records,
    records_to_csv,
    run_grid,
    run_replicate,
    summarize,
)
from bootimpute.validation import ESTIMATORS, METRICS

SMALL = dict(n_sims=2, n_boot=4, master_seed=5)


def test_grid_size():
    specs = build_grid()
    # per (n, pattern): one CC plus three BI strategies
    assert len(specs) == 2 * 9 * 4
    assert sum(s.approach == "CC" for s in specs) == 18
    assert {s.strategy_label for s in specs if s.approach == "CC"} == {"none"}


def test_spec_validation():
    with pytest.raises(ValueError):
        ScenarioSpec(approach="XX")
    with pytest.raises(KeyError):
        ScenarioSpec(pattern="Q")


def test_no_missingness_gives_zero_bias():
    rec = run_replicate(ScenarioSpec(n=400, pattern="none", **SMALL), 0)
    assert rec.fit_ok
    assert all(v == 0.0 for v in rec.bias.values())
    assert rec.pred_bias == 0.0 and rec.n_pred == 400


def test_replicate_record_contents():
    rec = run_replicate(ScenarioSpec(n=400, pattern="E", approach="CC", **SMALL), 1)
    assert rec.fit_ok and rec.strategy == "none"
    assert set(rec.bias) == {(m, e) for m in METRICS for e in ESTIMATORS}
    for k in rec.bias:
        assert rec.bias[k] == pytest.approx(rec.full[k] - rec.approach_value[k])
    assert rec.n_pred < 400


@pytest.fixture(scope="module")
def small_records():
    specs = build_grid(ns=[300], patterns=["A", "D"], strategies=["all"], approaches=["CC", "BI"], **SMALL)
    return specs, run_grid(specs)


def test_grid_order_and_count(small_records):
    specs, records = small_records
    assert len(records) == len(specs) * SMALL["n_sims"]
    assert [(r.pattern, r.approach, r.replicate) for r in records[:4]] == [
        ("A", "CC", 0), ("A", "CC", 1), ("A", "BI", 0), ("A", "BI", 1)]


def test_truth_shared_across_approaches(small_records):
    _, records = small_records
    by = {(r.pattern, r.approach, r.replicate): r for r in records}
    assert by[("A", "CC", 0)].full == by[("D", "BI", 0)].full


def test_parallel_matches_serial(small_records):
    specs, records = small_records
    assert records_to_csv(run_grid(specs, jobs=2)) == records_to_csv(records)


def test_record_csv_round_trip(small_records):
    _, records = small_records
    text = records_to_csv(records, ["seed=5"])
    assert text.splitlines()[1] == ",".join(RECORD_COLUMNS)
    back = read_records(io.StringIO(text))
    assert records_to_csv(back, ["seed=5"]) == text


def make_record(pattern, approach, rep, value, ok=True):
    rec = BiasRecord(750, pattern, approach, "all" if approach == "BI" else "none", rep, fit_ok=ok)
    if ok:
        rec.bias = {(m, e): value for m in METRICS for e in ESTIMATORS}
        rec.pred_bias = value
    else:
        rec.failure = "boom"
    return rec


def test_summarize_statistics():
    recs = [make_record("A", "BI", i, v) for i, v in enumerate([0.01, 0.03, 0.02])]
    recs.append(make_record("A", "BI", 3, 0.0, ok=False))
    rows = summarize(recs)
    auc = next(r for r in rows if r.metric == "auc" and r.estimator == "apparent")
    assert auc.mean == pytest.approx(0.02)
    assert auc.sd == pytest.approx(0.01)  # ddof=1
    assert auc.n_records == 4 and auc.n_ok == 3 and auc.failure_rate == 0.25
    assert len(rows) == len(METRICS) * len(ESTIMATORS) + 1


def test_summarize_single_and_all_failed():
    rows = summarize([make_record("B", "BI", 0, 0.5), make_record("B", "CC", 0, 0, ok=False)])
    single = next(r for r in rows if r.approach == "BI")
    assert single.single and single.sd == 0.0
    failed = next(r for r in rows if r.approach == "CC")
    assert failed.failure_rate == 1.0 and math.isnan(failed.mean)


def test_summarize_empty():
    with pytest.raises(ValueError):
        summarize([])


def test_format_table():
    recs = [make_record(p, a, i, 0.001 * (i + 1)) for p in "AB" for a in ("BI", "CC") for i in range(2)]
    table = format_table(summarize(recs), 750, "all")
    lines = table.splitlines()
    assert lines[0].startswith("Mean (SD) bias, n=750")
    assert lines[1].split(" | ")[1:3] == ["Original BI", "Original CC"]
    assert lines[2] == "AUC" and lines[5] == "Brier"
    assert lines[3].startswith("A | 0.002 (0.001)")
