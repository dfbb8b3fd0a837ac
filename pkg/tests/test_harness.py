import csv
import json
import math
import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from crdt_coord.harness import report
from crdt_coord.harness.experiment import CSV_COLUMNS, ExperimentConfig, RunRecord, run_experiment
from crdt_coord.harness.stats import (
    cohens_dz,
    iqr_filter,
    normalized_time,
    quantile,
    summarize,
    wilcoxon_signed_rank,
)

from oracles import cohens_dz_plain, type7_quantile, wilcoxon_bruteforce

# (task, seq s, par s, seq chars, par chars, seq s/kchar, par s/kchar) as published
PUBLISHED = [
    ("tic-tac-toe", 45.47, 35.89, 12_930, 11_509, 3.52, 3.12),
    ("registration", 56.13, 52.15, 17_196, 18_885, 3.26, 2.76),
    ("markdown", 69.33, 64.32, 18_285, 16_028, 3.79, 4.01),
    ("pomodoro", 56.27, 76.47, 14_952, 27_195, 3.76, 2.81),
    ("dashboard", 64.43, 83.19, 19_194, 37_922, 3.36, 2.19),
    ("visualizer", 66.39, 92.57, 18_389, 53_068, 3.61, 1.74),
]


# -- normalized time ------------------------------------------------------------------


@pytest.mark.parametrize("row", PUBLISHED, ids=[r[0] for r in PUBLISHED])
def test_normalized_time_reproduces_published_cells(row):
    _, t_seq, t_par, c_seq, c_par, n_seq, n_par = row
    assert normalized_time(t_seq, c_seq).value == pytest.approx(n_seq, abs=0.01)
    assert normalized_time(t_par, c_par).value == pytest.approx(n_par, abs=0.01)


def test_normalized_time_basics():
    assert normalized_time(10, 1000).value == 10.0
    zero = normalized_time(10, 0)
    assert zero.value is None and zero.flags


@settings(max_examples=200, deadline=None)
@given(t=st.floats(0.01, 1e4), c=st.integers(1, 10**6), k=st.floats(0.1, 100))
def test_normalized_time_scaling(t, c, k):
    base = normalized_time(t, c).value
    assert normalized_time(t * k, c).value == pytest.approx(base * k, rel=1e-9)
    assert normalized_time(t, c * 2).value == pytest.approx(base / 2, rel=1e-9)


# -- IQR filter --------------------------------------------------------------------------


def test_iqr_removes_the_obvious_outlier():
    res = iqr_filter([1, 2, 3, 4, 100])
    assert res.removed == [100] and res.kept == [1, 2, 3, 4]
    assert (res.q1, res.q3) == (2.0, 4.0)


def test_iqr_all_equal_keeps_everything():
    assert iqr_filter([5.0] * 10).removed == []


def test_iqr_small_samples_are_flagged_and_untouched():
    res = iqr_filter([1, 1000, 3])
    assert res.removed == [] and "n<4" in res.flags


def test_iqr_clean_normal_sample_loses_little():
    rng = random.Random(42)
    xs = [rng.gauss(50, 5) for _ in range(50)]
    assert len(iqr_filter(xs).removed) / 50 < 0.10


@settings(max_examples=200, deadline=None)
@given(st.lists(st.floats(-1e6, 1e6, allow_nan=False), min_size=4, max_size=60))
def test_iqr_is_exact_and_second_pass_only_shrinks(xs):
    res = iqr_filter(xs)
    q1, q3 = type7_quantile(xs, 0.25), type7_quantile(xs, 0.75)
    assert res.q1 == pytest.approx(q1) and res.q3 == pytest.approx(q3)
    assert sorted(res.kept + res.removed) == sorted(xs)
    assert all(res.lower <= x <= res.upper for x in res.kept)
    assert all(not res.lower <= x <= res.upper for x in res.removed)
    if len(res.kept) >= 4:
        again = iqr_filter(res.kept)
        # fences can only tighten or stay; the filter is applied once
        assert set(again.kept) <= set(res.kept)


def test_quantile_matches_type7_oracle():
    rng = random.Random(7)
    for _ in range(100):
        xs = [rng.uniform(-10, 10) for _ in range(rng.randint(1, 30))]
        q = rng.random()
        assert quantile(xs, q) == pytest.approx(type7_quantile(xs, q), abs=1e-12)


# -- Wilcoxon ----------------------------------------------------------------------------


def test_wilcoxon_all_negative_gives_zero():
    res = wilcoxon_signed_rank([(1, 2), (2, 4), (3, 6), (4, 8), (5, 10), (6, 12)])
    assert res.w == 0 and res.w_plus == 0 and res.w_minus == 21 and res.n == 6
    assert res.p is not None and res.p < 0.05


def test_wilcoxon_identical_pairs_are_degenerate():
    res = wilcoxon_signed_rank([(3, 3)] * 8)
    assert res.w is None and res.p is None and res.flags


def test_wilcoxon_small_n_flags():
    res = wilcoxon_signed_rank([(1, 2), (3, 1), (5, 9)])
    assert res.p is None and any("n=3" in f for f in res.flags)
    assert any("rough" in f for f in wilcoxon_signed_rank([(i, 2 * i) for i in range(1, 11)]).flags)


def _datasets():
    rng = random.Random(2024)
    for _ in range(100):
        n = rng.randint(6, 60)
        pairs = []
        for _ in range(n):
            a = round(rng.gauss(50, 10), rng.choice([0, 1, 2]))
            shift = rng.choice([0, 0, rng.gauss(2, 5)])
            pairs.append((a, round(a + shift, rng.choice([0, 1]))))
        yield pairs


def test_wilcoxon_matches_bruteforce_on_100_datasets():
    checked = 0
    for pairs in _datasets():
        ref = [p for p in pairs if p[0] != p[1]]
        if len(ref) < 6:
            continue
        w_ref, p_ref = wilcoxon_bruteforce(pairs)
        res = wilcoxon_signed_rank(pairs)
        assert res.w == pytest.approx(w_ref, abs=1e-9)
        assert res.p == pytest.approx(p_ref, abs=1e-6)
        checked += 1
    assert checked >= 90


def test_wilcoxon_matches_scipy():
    scipy_stats = pytest.importorskip("scipy.stats")
    for pairs in _datasets():
        diffs = [a - b for a, b in pairs]
        if sum(1 for d in diffs if d) < 6:
            continue
        ref = scipy_stats.wilcoxon(diffs, zero_method="wilcox", correction=True, method="approx")
        res = wilcoxon_signed_rank(pairs)
        assert res.w == pytest.approx(ref.statistic, abs=1e-9)
        assert res.p == pytest.approx(ref.pvalue, abs=1e-6)


@settings(max_examples=100, deadline=None)
@given(st.lists(st.tuples(st.integers(0, 100), st.integers(0, 100)), min_size=6, max_size=40),
       st.integers(-1000, 1000))
def test_wilcoxon_shift_invariance(pairs, c):
    a = wilcoxon_signed_rank(pairs)
    b = wilcoxon_signed_rank([(x + c, y + c) for x, y in pairs])
    assert (a.w, a.n, a.p) == (b.w, b.n, b.p)


# -- effect size --------------------------------------------------------------------------


def test_dz_examples():
    assert cohens_dz([(d, 0) for d in (2, 4, 6, 8)]).value == pytest.approx(1.936, abs=1e-3)
    assert cohens_dz([(d, 0) for d in (1, -1, 1, -1)]).value == 0
    assert cohens_dz([(1, 0)] * 5).value is None
    assert cohens_dz([(1, 0)]).value is None


def test_dz_matches_plain_oracle():
    for pairs in _datasets():
        if len({a - b for a, b in pairs}) < 2:
            continue
        assert cohens_dz(pairs).value == pytest.approx(cohens_dz_plain(pairs), abs=1e-9)


@settings(max_examples=100, deadline=None)
@given(st.lists(st.floats(-100, 100, allow_nan=False), min_size=3, max_size=30), st.floats(0.01, 100))
def test_dz_sign_and_scale(diffs, k):
    base = cohens_dz([(d, 0) for d in diffs])
    if base.value is None or abs(base.value) < 1e-9:
        return
    mean = sum(diffs) / len(diffs)
    assert math.copysign(1, base.value) == math.copysign(1, mean)
    scaled = cohens_dz([(d * k, 0) for d in diffs]).value
    assert scaled == pytest.approx(base.value, rel=1e-6)


def test_summarize_filters_outliers():
    s = summarize([1, 2, 3, 4, 100])
    assert s.n == 4 and s.removed_outliers == 1 and s.mean == 2.5


# -- experiments and reports -----------------------------------------------------------------


def _records():
    cfg = ExperimentConfig(script="tic-tac-toe", runs=6)
    seq = run_experiment(ExperimentConfig(**{**cfg.to_dict(), "mode": "seq"}))
    par = run_experiment(ExperimentConfig(**{**cfg.to_dict(), "mode": "par"}))
    return seq + par


def test_config_hash_is_stable_and_sensitive():
    a, b = ExperimentConfig(), ExperimentConfig()
    assert a.config_hash() == b.config_hash()
    assert a.config_hash() != ExperimentConfig(agents=3).config_hash()
    assert ExperimentConfig(mode="par").mode == "parallel"
    with pytest.raises(ValueError):
        ExperimentConfig(agents=6)
    with pytest.raises(ValueError):
        ExperimentConfig.from_dict({"bogus": 1})


def test_empty_report_is_header_only(tmp_path):
    summary = report.write_report([], tmp_path)
    assert (tmp_path / "runs.csv").read_text().strip() == ",".join(CSV_COLUMNS)
    assert summary["tasks"] == {}


def test_report_roundtrip_and_deltas(tmp_path):
    records = _records()
    summary = report.write_report(records, tmp_path, {"seed": 0})
    with open(tmp_path / "runs.csv", newline="") as fh:
        rows = list(csv.DictReader(fh))
    assert tuple(rows[0]) == CSV_COLUMNS and len(rows) == 12
    back = report.read_csv(tmp_path / "runs.csv")
    assert [r.seed for r in back] == [r.seed for r in records]
    assert all(r.converged for r in back)
    entry = json.loads((tmp_path / "summary.json").read_text())["tasks"]["tic-tac-toe"]
    cmp_ = entry["comparison"]
    seq_mean = entry["modes"]["sequential"]["responseS"]["mean"]
    par_mean = entry["modes"]["parallel"]["responseS"]["mean"]
    assert cmp_["deltaPctResponseMean"] == pytest.approx((par_mean - seq_mean) / seq_mean * 100)
    assert cmp_["pairedRuns"] == 6
    assert entry["qualityScores"] is None
    assert "delta:" in (tmp_path / "summary.txt").read_text()
    assert summary["seeds"] == list(range(6))


def test_report_is_stable_for_a_fixed_seed(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    report.write_report(_records(), a)
    report.write_report(_records(), b)
    for name in ("runs.csv", "summary.json", "summary.txt"):
        assert (a / name).read_bytes() == (b / name).read_bytes()


def test_nan_values_become_null(tmp_path):
    rec = RunRecord("t", "parallel", 1, float("nan"), 0, None, 0, 0, 0, False, 0)
    report.write_report([rec], tmp_path)
    data = json.loads((tmp_path / "summary.json").read_text())
    assert data["tasks"]["t"]["modes"]["parallel"]["responseS"]["mean"] is None


def test_iqr_second_pass_can_remove_more():
    """A one-pass fence rule is not idempotent: re-filtering tightens the fences."""
    xs = [1.06, -1.44, -0.01, -0.02, 0.49, 1.08, -0.01, 0.37, 1.52, -1.85, -0.33, 5]
    first = iqr_filter(xs)
    assert sorted(first.removed) == [-1.85, 5.0]
    assert iqr_filter(first.kept).removed == [-1.44]
    # what does hold: the kept set is stable under the original fences
    assert all(first.lower <= x <= first.upper for x in first.kept)
