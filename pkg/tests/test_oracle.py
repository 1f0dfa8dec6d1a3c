from fractions import Fraction

import pytest
from hypothesis import given
from hypothesis import strategies as st

from misesim.errors import InsufficientData, UndefinedSlowdown
from misesim.oracle import (
    AloneCache,
    actual_slowdown,
    estimation_error,
    evaluate,
    harmonic_speedup,
    max_slowdown,
    replay_alone,
    weighted_speedup,
)
from misesim.sim import run_simulation
from misesim.workloads import AppSpec

TOL = 1e-9


def test_actual_slowdown_examples():
    assert actual_slowdown(1.0, 0.5) == 2.0
    assert actual_slowdown(0.67, 0.67) == 1.0
    with pytest.raises(UndefinedSlowdown):
        actual_slowdown(1.0, 0.0)


def test_estimation_error_examples():
    assert estimation_error(2.1, 2.0) == pytest.approx(5.0, abs=TOL)
    assert estimation_error(2.0, 2.0) == 0.0
    assert estimation_error(1.0, 2.0) == pytest.approx(50.0, abs=TOL)
    with pytest.raises(ValueError):
        estimation_error(1.0, 0.0)


def test_speedup_examples():
    assert harmonic_speedup([1, 1, 1, 1]) == 1.0
    assert harmonic_speedup([2, 2]) == 0.5
    assert harmonic_speedup([1, 3]) == 0.5
    assert weighted_speedup([1, 1]) == 2.0
    assert weighted_speedup([2, 4]) == 0.75
    assert weighted_speedup([1]) == 1.0
    assert max_slowdown([1, 2, 3]) == 3.0
    assert max_slowdown([1, 1]) == 1.0
    for fn in (harmonic_speedup, weighted_speedup, max_slowdown):
        with pytest.raises(ValueError):
            fn([])


slowdown_lists = st.lists(st.floats(0.1, 50.0), min_size=1, max_size=16)


@given(slowdown_lists)
def test_metric_bounds(s):
    n = len(s)
    assert harmonic_speedup(s) <= 1 / min(s) + TOL
    assert weighted_speedup(s) <= n / min(s) + TOL
    assert max_slowdown(s) >= 1 / (harmonic_speedup(s)) - TOL * max(s) * n


@given(st.floats(0.01, 100), st.floats(0.01, 100))
def test_error_non_negative(est, act):
    e = estimation_error(est, act)
    assert e >= 0
    assert (e == 0) == (est == act)


def test_closed_form_alone_ipc(dram, hit_app):
    # per block: 100 compute cycles, 1 issue cycle, 50 stall cycles
    horizon = 20 * 151 * 100
    ipc = replay_alone(hit_app, dram, seed=0, horizon=horizon, warmup_cycles=horizon // 2)
    assert Fraction(ipc).limit_denominator(1000) == Fraction(101, 151)
    assert ipc == pytest.approx(101 / 151, abs=TOL)


def test_replay_matches_single_app_shared_run(dram):
    spec = AppSpec(compute_gap=7, row_locality=0.4, working_rows=16)
    res = run_simulation(dram, [spec], seed=5, horizon=200_000, epoch_len=10_000, interval_len=100_000)
    oracle = evaluate(res, dram, cache=AloneCache())
    ipc = replay_alone(spec, dram, seed=5, horizon=200_000, warmup_cycles=100_000)
    assert oracle.apps[0].shared_ipc == pytest.approx(ipc, rel=1e-3)
    assert oracle.apps[0].alone_ipc == oracle.apps[0].shared_ipc
    again = replay_alone(spec, dram, seed=5, horizon=200_000, warmup_cycles=100_000)
    assert again == ipc


def test_replay_horizon_too_small(dram, hit_app):
    with pytest.raises(InsufficientData):
        replay_alone(hit_app, dram, seed=0, horizon=1000, warmup_cycles=1000)


@pytest.mark.parametrize("spec", [
    AppSpec(compute_gap=0, row_locality=0.0, working_rows=8, mlp_limit=2),
    AppSpec(compute_gap=50, row_locality=0.9, working_rows=64),
])
def test_solo_identity(dram, spec):
    res = run_simulation(dram, [spec], seed=2, horizon=300_000, epoch_len=10_000, interval_len=100_000)
    oracle = evaluate(res, dram, cache=AloneCache())
    assert oracle.actual_slowdowns == [1.0]
    assert all(s == 1.0 for s in oracle.apps[0].interval_slowdowns)
    assert oracle.mise_error_pct <= 5.0 and oracle.stfm_error_pct <= 5.0


def test_evaluate_needs_post_warmup_interval(dram, hit_app):
    res = run_simulation(dram, [hit_app], horizon=100_000, epoch_len=10_000, interval_len=100_000)
    with pytest.raises(InsufficientData):
        evaluate(res, dram)


def test_evaluate_fills_actual_slowdowns(dram):
    apps = [AppSpec(compute_gap=0, row_locality=0.3), AppSpec(compute_gap=20, row_locality=0.6)]
    res = run_simulation(dram, apps, seed=1, horizon=300_000, epoch_len=10_000, interval_len=100_000)
    oracle = evaluate(res, dram, cache=AloneCache())
    for row in oracle.estimates:
        assert all(e.actual_slowdown is not None and e.actual_slowdown >= 0.99 for e in row)
    assert len(oracle.per_app_mise_error) == 2
