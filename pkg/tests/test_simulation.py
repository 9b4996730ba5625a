import time

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from tpam.pam import AdaptationMode, ConfigurationError, PamHyper, PamKind, init_state, sample, update
from tpam.simulation import (
    LogLevel,
    SimConfig,
    acceptance_probability,
    run_generators,
    simulate_run,
    success_rate,
    write_meta_csv,
    write_trace_csv,
)
from tpam.targets import TargetSpec, trajectory

LIN = TargetSpec("lin_inc")


@pytest.mark.parametrize("theta,target,p_max,expected", [
    (0.5, 0.5, 1.0, 1.0), (0.3, 0.7, 0.3, 0.0), (0.6, 0.5, 0.5, 0.4)])
def test_acceptance_examples(theta, target, p_max, expected):
    assert acceptance_probability(theta, target, 1.0, p_max) == pytest.approx(expected, abs=1e-12)


def test_acceptance_pair_distances():
    p = acceptance_probability([0.5, 0.5], [0.8, 0.9], 1.0, 1.0)
    assert p == pytest.approx(1 - np.hypot(0.3, 0.4) / np.sqrt(2))
    assert acceptance_probability([0.5, 0.5], [0.8, 0.9], 1.0, 1.0, "max") == pytest.approx(0.6)


def test_acceptance_rejects_nonpositive_alpha():
    with pytest.raises(ValueError):
        acceptance_probability(0.5, 0.5, 0.0, 1.0)


@pytest.mark.parametrize("succ,expected", [(0, 0.0), (50000, 1.0), (25000, 0.5)])
def test_success_rate_examples(succ, expected):
    assert success_rate(succ, 1000, 50) == expected


def test_success_rate_out_of_range():
    with pytest.raises(ValueError):
        success_rate(50001, 1000, 50)


@pytest.mark.parametrize("kind", list(PamKind))
def test_zero_p_max_means_no_success(kind):
    res = simulate_run(kind, None, LIN, SimConfig(p_max=0.0, t_max=200, seed=1))
    assert res.r_succ == 0.0


def test_alpha_zero_rejected():
    with pytest.raises(ConfigurationError):
        SimConfig(alpha=0.0)


@pytest.mark.parametrize("bad", [dict(n=0), dict(t_max=0), dict(p_max=1.2), dict(distance="l1")])
def test_invalid_config(bad):
    with pytest.raises(ConfigurationError):
        SimConfig(**bad)


def test_tiny_alpha_accepts_everything():
    res = simulate_run("jade", None, LIN, SimConfig(alpha=1e-12, p_max=1.0, seed=2))
    assert res.r_succ > 0.9999


def test_same_seed_same_trace():
    cfg = SimConfig(t_max=100, seed=7, log_level=LogLevel.FULL_TRACE, mode="FC")
    a = simulate_run("shade", None, TargetSpec("random_walk", step=0.05), cfg)
    b = simulate_run("shade", None, TargetSpec("random_walk", step=0.05), cfg)
    assert np.array_equal(a.samples, b.samples) and np.array_equal(a.flags, b.flags)
    assert np.array_equal(a.meta, b.meta) and a.r_succ == b.r_succ


def test_different_seeds_differ():
    a = simulate_run("jade", None, LIN, SimConfig(seed=1))
    b = simulate_run("jade", None, LIN, SimConfig(seed=2))
    assert a.successes != b.successes


@pytest.mark.parametrize("kind", list(PamKind))
@pytest.mark.parametrize("mode", ["F", "C", "FC"])
def test_r_succ_matches_trace(kind, mode):
    cfg = SimConfig(t_max=150, n=20, seed=3, p_max=0.7, mode=mode, log_level="full_trace")
    res = simulate_run(kind, None, TargetSpec("sin", omega=20), cfg)
    assert 0.0 <= res.r_succ <= 1.0
    assert res.r_succ == res.flags.sum() / (cfg.t_max * cfg.n)


@pytest.mark.parametrize("kind", list(PamKind))
def test_kernel_matches_public_api_loop(kind):
    """The compiled loop equals sample -> accept -> update through the public API."""
    spec = TargetSpec("random_walk", step=0.05)
    cfg = SimConfig(t_max=60, n=10, seed=11, p_max=0.8, mode="FC")
    res = simulate_run(kind, None, spec, cfg)

    pam_rng, target_rng = run_generators(cfg.seed)
    targets = trajectory(spec, cfg.t_max, target_rng)
    state = init_state(kind, None, cfg.n, AdaptationMode.FC_PAIR)
    total = 0
    for t in range(cfg.t_max):
        smp = sample(state, pam_rng)
        flags = np.array([
            pam_rng.random() < acceptance_probability(smp[i], [targets[t]] * 2, cfg.alpha, cfg.p_max)
            for i in range(cfg.n)])
        total += int(flags.sum())
        update(state, smp, flags, pam_rng)
    assert res.successes == total


def test_monte_carlo_constant_distance():
    """Samples held at distance 0.2 from a constant target succeed with p = 0.8."""
    hyper = PamHyper(fixed_c=0.7)
    n, t_max = 100, 1000
    res = simulate_run("fixed", hyper, TargetSpec("const", value=0.5),
                       SimConfig(n=n, t_max=t_max, seed=5))
    trials = n * t_max
    p = 0.8
    sigma = np.sqrt(p * (1 - p) / trials)
    assert abs(res.r_succ - p) <= 3 * sigma


def test_strict_pseudocode_runs_one_fewer_iteration():
    cfg = SimConfig(t_max=100, seed=1, strict_pseudocode=True, log_level="full_trace")
    res = simulate_run("jade", None, LIN, cfg)
    assert res.iterations == 99 and res.samples.shape[0] == 99
    assert res.r_succ == res.flags.sum() / (100 * 50)


def test_independent_pair_targets():
    cfg = SimConfig(t_max=50, mode="FC", seed=0, log_level="full_trace")
    res = simulate_run("jade", None, (TargetSpec("lin_dec"), TargetSpec("lin_inc")), cfg)
    assert res.targets[-1, 0] == pytest.approx(0.1) and res.targets[-1, 1] == pytest.approx(0.9)


def test_single_run_is_fast():
    cfg = SimConfig(seed=0)
    simulate_run("shade", None, LIN, cfg)
    start = time.perf_counter()
    for kind in PamKind:
        simulate_run(kind, None, LIN, cfg)
    assert (time.perf_counter() - start) / len(PamKind) < 0.05


def test_trace_csv_layout(tmp_path):
    cfg = SimConfig(t_max=4, n=3, seed=0, log_level="full_trace")
    res = simulate_run("shade", PamHyper(memory_size=3), LIN, cfg)
    write_trace_csv(res, tmp_path / "t.csv")
    write_meta_csv(res, tmp_path / "m.csv")
    lines = (tmp_path / "t.csv").read_text().splitlines()
    assert lines[0] == "t,target,i,theta_f,theta_c,success"
    assert len(lines) == 1 + 4 * 3
    t, g, i, f, c, s = lines[1].split(",")
    assert (t, i, f) == ("1", "1", "") and float(g) == pytest.approx(0.6)
    meta = (tmp_path / "m.csv").read_text().splitlines()
    assert meta[0] == "t,M_c_1,M_c_2,M_c_3" and meta[1] == "1,0.5,0.5,0.5"


def test_trace_csv_needs_trace(tmp_path):
    res = simulate_run("jade", None, LIN, SimConfig(t_max=5))
    with pytest.raises(ValueError):
        write_trace_csv(res, tmp_path / "x.csv")


@settings(max_examples=25, deadline=None)
@given(st.sampled_from(list(PamKind)), st.floats(0.0, 1.0), st.floats(0.01, 10.0),
       st.integers(0, 1000))
def test_r_succ_in_unit_interval(kind, p_max, alpha, seed):
    res = simulate_run(kind, None, TargetSpec("sin", omega=40),
                       SimConfig(t_max=50, n=10, p_max=p_max, alpha=alpha, seed=seed))
    # every acceptance probability is at most p_max; 500 draws allow ~0.11 of noise
    assert 0.0 <= res.r_succ <= p_max + 0.15
