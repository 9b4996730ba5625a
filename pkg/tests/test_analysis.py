import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from tpam.analysis import (
    CellKey,
    ComparisonVerdict,
    ParamLog,
    RunRecord,
    aggregate,
    compare,
    distance_to_curve,
    pooled_profile,
    profile_from_distances,
    read_runs_csv,
    read_summary_csv,
    smoothed_success_trajectory,
    success_prob_vs_distance,
    summarize,
    write_runs_csv,
    write_summary_csv,
)
from tpam.simulation import SimConfig, simulate_run, write_trace_csv
from tpam.targets import TargetSpec

from oracles import centred_average_bruteforce, rank_sum_test

KEY = CellKey("jade", "lin_inc", None, None, 0.5)


# --- summaries -------------------------------------------------------------

def test_summarize_symmetric_set():
    s = summarize(KEY, [0.6, 0.2, 0.4])
    assert s.mean == pytest.approx(0.4) and s.median == 0.4 and s.median_run == 2
    assert s.std == pytest.approx(0.2)


def test_summarize_single_run():
    s = summarize(KEY, [0.37])
    assert s.mean == s.median == 0.37 and s.std == 0.0 and s.runs == 1


def test_summarize_identical_runs():
    s = summarize(KEY, [0.25] * 101)
    assert s.std == 0.0 and s.mean == 0.25 and s.runs == 101


def test_summarize_even_count_takes_lower_middle():
    assert summarize(KEY, [0.1, 0.4, 0.3, 0.2]).median_run == 3


def test_summarize_empty():
    with pytest.raises(ValueError):
        summarize(KEY, [])


@settings(max_examples=50, deadline=None)
@given(st.lists(st.floats(0.0, 1.0), min_size=1, max_size=30), st.randoms())
def test_aggregate_permutation_invariant(vals, rnd):
    other = CellKey("shade", "sin", 10.0, None, 0.1)
    recs = [RunRecord(KEY if j % 2 else other, j, j, v) for j, v in enumerate(vals)]
    shuffled = recs[:]
    rnd.shuffle(shuffled)
    a, b = aggregate(recs), aggregate(shuffled)
    assert a.cells == b.cells
    for c in a.cells:
        assert 0.0 <= c.mean <= 1.0 and 0.0 <= c.median <= 1.0


def test_aggregate_sorted_by_key():
    keys = [CellKey("shade", "lin_inc", None, None, 0.2), CellKey("jade", "sin", 20.0, None, 0.1),
            CellKey("jade", "sin", 10.0, None, 0.1)]
    summ = aggregate(RunRecord(k, 0, 0, 0.5) for k in keys)
    assert [c.cell for c in summ.cells] == [keys[2], keys[1], keys[0]]
    assert summ[keys[0]].runs == 1
    with pytest.raises(KeyError):
        summ[KEY]


def test_summary_and_runs_csv_roundtrip(tmp_path):
    recs = [RunRecord(KEY, r, 10 + r, v) for r, v in enumerate([0.1234567891, 0.5, 0.25])]
    recs.append(RunRecord(CellKey("mde", "random_walk", None, 0.03, 1.0), 0, 10, 0.75))
    write_runs_csv(recs, tmp_path / "runs.csv")
    back = read_runs_csv(tmp_path / "runs.csv")
    assert {r.cell for r in back} == {r.cell for r in recs}
    assert back[0].r_succ == pytest.approx(0.1234567891, rel=1e-8)
    summ = aggregate(back)
    write_summary_csv(summ, tmp_path / "summary.csv")
    again = read_summary_csv(tmp_path / "summary.csv")
    assert [c.cell for c in again.cells] == [c.cell for c in summ.cells]
    header = (tmp_path / "summary.csv").read_text().splitlines()[0]
    assert header == "pam,family,omega,step,p_max,runs,mean,median,std,median_run"


# --- comparisons -----------------------------------------------------------

def test_compare_identical_is_tie():
    assert compare([0.3] * 10, [0.3] * 10)[0] is ComparisonVerdict.TIE
    x = np.linspace(0, 1, 20)
    assert compare(x, x)[0] is ComparisonVerdict.TIE


def test_compare_disjoint_supports():
    a, b = np.linspace(0.6, 0.9, 15), np.linspace(0.1, 0.4, 15)
    assert compare(a, b)[0] is ComparisonVerdict.A_BETTER
    assert compare(b, a)[0] is ComparisonVerdict.B_BETTER


def test_compare_matches_rank_sum_oracle():
    rng = np.random.default_rng(0)
    base = rng.beta(5, 5, size=101)
    for shift in (0.1, -0.1):
        verdict, p = compare(base + shift, base)
        _, p_oracle = rank_sum_test(base + shift, base)
        assert p == pytest.approx(p_oracle, rel=1e-9)
        expected = ComparisonVerdict.A_BETTER if shift > 0 else ComparisonVerdict.B_BETTER
        assert verdict is expected


@settings(max_examples=40, deadline=None)
@given(st.lists(st.integers(0, 8), min_size=3, max_size=25),
       st.lists(st.integers(0, 8), min_size=3, max_size=25))
def test_compare_p_value_with_ties_matches_oracle(a, b):
    n = min(len(a), len(b))
    a, b = np.array(a[:n]) / 8, np.array(b[:n]) / 8
    if np.all(np.concatenate([a, b]) == a[0]):
        return
    _, p = compare(a, b)
    assert p == pytest.approx(rank_sum_test(a, b)[1], rel=1e-9, abs=1e-12)


def test_compare_unequal_counts():
    with pytest.raises(ValueError):
        compare([0.1, 0.2], [0.3])


# --- smoothing -------------------------------------------------------------

def _log(t, v, s):
    return ParamLog(np.asarray(t), np.asarray(v, dtype=float), np.asarray(s, dtype=bool))


def test_smoothing_constant_values():
    rng = np.random.default_rng(0)
    t = np.repeat(np.arange(1, 101), 5)
    log = _log(t, np.full(t.size, 0.37), rng.random(t.size) < 0.3)
    curve = smoothed_success_trajectory(log, window=9, iterations=100)
    assert np.allclose(curve, 0.37)


def test_smoothing_window_one_is_per_iteration_mean():
    log = _log([1, 1, 1, 2, 2, 3], [0.2, 0.4, 0.9, 0.6, 0.1, 0.3], [1, 1, 0, 1, 0, 1])
    assert np.allclose(smoothed_success_trajectory(log, window=1), [0.3, 0.6, 0.3])


def test_smoothing_interpolates_gaps():
    log = _log([1, 2, 3, 4, 5], [0.2, 0.9, 0.9, 0.9, 0.6], [1, 0, 0, 0, 1])
    assert np.allclose(smoothed_success_trajectory(log, window=1), [0.2, 0.3, 0.4, 0.5, 0.6])


@settings(max_examples=25, deadline=None)
@given(st.integers(1, 15), st.integers(0, 2**32 - 1))
def test_smoothing_matches_bruteforce(window, seed):
    rng = np.random.default_rng(seed)
    T = 40
    t = np.repeat(np.arange(1, T + 1), 3)
    v = rng.random(t.size)
    s = rng.random(t.size) < 0.6
    s[0] = True
    curve = smoothed_success_trajectory(_log(t, v, s), window=window, iterations=T)
    oracle = centred_average_bruteforce(t, v, s, T, window)
    has = ~np.isnan(oracle)
    assert np.allclose(curve[has], oracle[has], rtol=1e-12, atol=1e-12)


def test_smoothing_tracks_ramp():
    T, w = 400, 21
    t = np.repeat(np.arange(1, T + 1), 10)
    slope = 0.5 / T
    truth = 0.2 + slope * np.arange(1, T + 1)
    log = _log(t, truth[t - 1], np.ones(t.size))
    curve = smoothed_success_trajectory(log, window=w)
    assert np.all(np.abs(curve - truth) <= w / 2 * slope + 1e-12)
    oracle = centred_average_bruteforce(t, truth[t - 1], np.ones(t.size, dtype=bool), T, w)
    assert np.allclose(curve, oracle)


def test_smoothing_default_window_and_errors():
    t = np.arange(1, 201)
    log = _log(t, t / 200, np.ones(200))
    assert np.allclose(smoothed_success_trajectory(log),
                       smoothed_success_trajectory(log, window=10))
    with pytest.raises(ValueError):
        smoothed_success_trajectory(_log([1], [0.1], [False]))
    with pytest.raises(ValueError):
        smoothed_success_trajectory(log, window=0)


# --- profiles --------------------------------------------------------------

def test_step_function_profile():
    d = np.linspace(0.0, 0.4, 4001)
    prof = profile_from_distances(d, d < 0.1, n_bins=8)
    assert prof.probability.tolist() == [1.0, 1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0]
    assert np.all(np.diff(prof.bin_lo) > 0)


def test_all_successful_profile():
    d = np.random.default_rng(0).random(500)
    prof = profile_from_distances(d, np.ones(500, dtype=bool), n_bins=10)
    assert np.all(prof.probability[~prof.empty] == 1.0)


def test_empty_bins_are_nan_and_skipped():
    prof = profile_from_distances([0.0, 0.01, 1.0], [True, True, False], n_bins=4)
    assert np.isnan(prof.probability[1]) and prof.empty[1]
    assert prof.inversions(min_count=1) == []


def test_inversion_counting():
    d = np.repeat([0.05, 0.15, 0.25, 0.35], 30)
    s = np.concatenate([np.arange(30) < k for k in (20, 25, 10, 12)])
    prof = profile_from_distances(d, s, n_bins=4)
    assert prof.inversions(min_count=20) == [0, 2]
    assert prof.inversions(min_count=31) == []


def test_profile_csv(tmp_path):
    prof = profile_from_distances([0.0, 0.5, 1.0], [True, False, False], n_bins=2)
    prof.write_csv(tmp_path / "p.csv")
    lines = (tmp_path / "p.csv").read_text().splitlines()
    assert lines[0] == "bin_lo,bin_hi,successes,total,probability"
    assert lines[1] == "0,0.5,1,1,1"


def test_self_consistency_on_generated_trace():
    """Binned success frequency reproduces max(1 - d, 0) within 3 sigma."""
    res = simulate_run("shade", None, TargetSpec("sin", omega=20),
                       SimConfig(seed=0, log_level="full_trace"))
    log = ParamLog.from_run(res, "C")
    d = distance_to_curve(log, res.targets[:, 1])
    prof = profile_from_distances(d, log.success, n_bins=20)
    which = np.clip(np.searchsorted(np.append(prof.bin_lo, prof.bin_hi[-1]), d, "right") - 1, 0, 19)
    for b in np.flatnonzero(prof.total >= 500):
        p = np.maximum(1.0 - d[which == b], 0.0)
        expected = p.mean()
        sigma = np.sqrt(np.sum(p * (1 - p))) / p.size
        assert abs(prof.probability[b] - expected) <= 3 * sigma + 1e-12


def test_profile_against_curve_and_pooling():
    rng = np.random.default_rng(1)
    logs = []
    for _ in range(3):
        t = np.repeat(np.arange(1, 51), 4)
        v = rng.random(t.size)
        curve = np.full(50, 0.5)
        logs.append((_log(t, v, np.abs(v - 0.5) < 0.2), curve))
    pooled = pooled_profile(logs, n_bins=5)
    assert pooled.total.sum() == 600
    single = success_prob_vs_distance(*logs[0], n_bins=5)
    assert single.total.sum() == 200
    with pytest.raises(ValueError):
        pooled_profile([], n_bins=5)


def test_distance_needs_covering_curve():
    with pytest.raises(ValueError):
        distance_to_curve(_log([1, 5], [0.1, 0.2], [1, 1]), np.zeros(3))


# --- parameter logs --------------------------------------------------------

def test_param_log_from_trace_csv(tmp_path):
    res = simulate_run("jade", None, TargetSpec("lin_dec"),
                       SimConfig(t_max=20, n=4, seed=0, log_level="full_trace"))
    write_trace_csv(res, tmp_path / "trace.csv")
    from_csv = ParamLog.read_csv(tmp_path / "trace.csv", "C")
    direct = ParamLog.from_run(res, "C")
    assert np.array_equal(from_csv.t, direct.t)
    assert np.allclose(from_csv.value, direct.value, rtol=1e-8)
    assert np.array_equal(from_csv.success, direct.success)
    with pytest.raises(ValueError):
        ParamLog.from_run(simulate_run("jade", None, TargetSpec("lin_dec"), SimConfig(t_max=5)))


def test_param_log_from_de_csv(tmp_path):
    (tmp_path / "p.csv").write_text("t,F,C,success\n1,0.5,0.9,1\n1,0.4,0.8,0\n2,0.3,0.7,1\n")
    log = ParamLog.read_csv(tmp_path / "p.csv", "F")
    assert log.t.tolist() == [1, 1, 2] and log.value.tolist() == [0.5, 0.4, 0.3]
    assert log.success.tolist() == [True, False, True] and log.iterations == 2


def test_param_log_validation():
    with pytest.raises(ValueError):
        ParamLog(np.array([1, 2]), np.array([0.1]), np.array([True, False]))
    with pytest.raises(ValueError):
        ParamLog.from_arrays(np.zeros((2, 2, 2)), np.zeros((2, 2)), "X")
