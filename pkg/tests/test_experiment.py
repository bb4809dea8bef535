import dataclasses
import math
from concurrent.futures import ProcessPoolExecutor

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from shared_naming import GameConfig, InvalidConfig, track_run
from shared_naming.experiment import (
    InsufficientGrid,
    SweepCell,
    SweepConfig,
    aggregate,
    check_bound,
    derive_seed,
    find_peak_lambda,
    nd_upper_bound,
    run_cell,
    run_sweep,
    trend_violations,
)

from oracle import sample_distribution


def two_case_bound(n, lam, c):
    """The bound written with its two cases spelled out."""
    chosen = lam * n / 2
    shared_part = c if chosen > c else chosen
    return (1 - lam) * n / 2 + shared_part


@pytest.mark.parametrize("n, lam, c, expected", [
    (100, 0.0, 500, 50.0),
    (100, 1.0, 5, 5.0),
    (100, 0.5, 100, 50.0),
])
def test_bound_values(n, lam, c, expected):
    assert nd_upper_bound(n, lam, c) == expected


@given(st.integers(2, 10_000), st.floats(0, 1), st.integers(1, 10_000))
def test_bound_closed_form_matches_cases(n, lam, c):
    assert math.isclose(nd_upper_bound(n, lam, c), two_case_bound(n, lam, c), abs_tol=1e-9)


@pytest.mark.parametrize("args", [(1, 0.5, 1), (10, -0.1, 1), (10, 1.1, 1), (10, 0.5, 0)])
def test_bound_rejects_bad_parameters(args):
    with pytest.raises(InvalidConfig):
        nd_upper_bound(*args)


def test_derived_seeds_distinct_and_stable():
    seeds = [derive_seed(42, i) for i in range(20_000)]
    assert len(set(seeds)) == len(seeds)
    assert all(0 <= s < 2**64 for s in seeds)
    assert seeds[:5] == [derive_seed(42, i) for i in range(5)]
    assert derive_seed(42, 0) != derive_seed(43, 0)


def test_cell_baseline():
    cell = run_cell(100, 0.0, 1, 200, master_seed=1)
    assert 1750 <= cell.mean["t_conv"] <= 3250
    assert cell.non_converged == 0


def test_cell_lambda_one_single_word():
    cell = run_cell(100, 1.0, 1, 50, master_seed=2)
    assert cell.p_shared == 1.0
    assert cell.mean["max_nd"] == 1.0 and cell.sd["max_nd"] == 0.0


def test_cell_matches_independent_simulator():
    n, lam, c, runs = 4, 0.5, 2, 10_000
    cell = run_cell(n, lam, c, runs, master_seed=3)
    sample = sample_distribution(n, lam, c, runs, seed=3)
    p_oracle = sum(shared for _, shared in sample) / runs
    se = math.sqrt(cell.p_shared * (1 - cell.p_shared) / runs
                   + p_oracle * (1 - p_oracle) / runs)
    assert abs(cell.p_shared - p_oracle) < 3 * se
    t_oracle = np.array([t for t, _ in sample])
    se_t = math.hypot(cell.stderr("t_conv"), t_oracle.std(ddof=1) / math.sqrt(runs))
    assert abs(cell.mean["t_conv"] - t_oracle.mean()) < 3 * se_t


def test_aggregate_statistics():
    runs = [track_run(GameConfig(20, 0.3, 4, seed=s)) for s in range(30)]
    runs.append(track_run(GameConfig(20, 0.3, 4, seed=99, max_steps=5)))
    cell = aggregate(runs, 0.3, 4, 20)
    done = runs[:30]
    assert cell.runs == 31 and cell.non_converged == 1
    assert cell.mean["t_conv"] == pytest.approx(np.mean([r.t_conv for r in done]))
    assert cell.sd["max_nw"] == pytest.approx(np.std([r.max_nw for r in done], ddof=1))
    assert cell.p_shared == sum(r.consensus_in_shared for r in done) / 30


def test_averaged_series_pads_converged_runs():
    n = 10
    runs = [track_run(GameConfig(n, 0.5, 3, seed=s, sample_stride=3), series=True)
            for s in range(40)]
    cell = aggregate(runs, 0.5, 3, n, stride=3)
    longest = max(r.steps for r in runs)
    assert cell.series[-1, 0] == longest // 3 * 3
    assert np.all(cell.series[:, 0] % 3 == 0)
    # brute-force average over a per-step replay
    for row in cell.series[:: max(1, len(cell.series) // 10)]:
        t = int(row[0])
        vals = []
        for r in runs:
            full = track_run(dataclasses.replace(r.config, sample_stride=1), series=True).series
            vals.append(full[t - 1, 1:] if t <= r.steps else (n, 1, 1))
        np.testing.assert_allclose(row[1:], np.mean(vals, axis=0))


def test_sweep_lambda_zero_independent_of_c():
    cells = run_sweep(SweepConfig(50, [0.0], [1, 500], 40, master_seed=8))
    a, b = cells
    assert (a.mean, a.sd, a.n_converged) == (b.mean, b.sd, b.n_converged)
    assert a.p_shared == b.p_shared == 0.0


def test_sweep_order_and_indices():
    cells = run_sweep(SweepConfig(20, [0.0, 0.5, 1.0], [1, 5], 5))
    assert [(c.lam, c.c_words) for c in cells] == [
        (0.0, 1), (0.0, 5), (0.5, 1), (0.5, 5), (1.0, 1), (1.0, 5)]
    assert [(c.lambda_index, c.c_index) for c in cells] == [
        (0, 0), (0, 1), (1, 0), (1, 1), (2, 0), (2, 1)]


def test_sweep_is_deterministic_across_workers():
    config = dict(n_agents=30, lambdas=[0.0, 0.4], c_values=[3, 20], runs_per_cell=30,
                  master_seed=5, series=True, sample_stride=7)
    serial = run_sweep(SweepConfig(**config))
    parallel = run_sweep(SweepConfig(**config, workers=2))
    for a, b in zip(serial, parallel):
        assert (a.mean, a.sd, a.n_shared) == (b.mean, b.sd, b.n_shared)
        np.testing.assert_array_equal(a.series, b.series)
    with ProcessPoolExecutor(2) as pool:
        cell = run_cell(30, 0.4, 3, 30, master_seed=5, workers=2, executor=pool)
    assert cell.mean == serial[2].mean


@pytest.mark.parametrize("kwargs", [
    dict(lambdas=[], c_values=[1]),
    dict(lambdas=[0.5], c_values=[]),
    dict(lambdas=[1.5], c_values=[1]),
    dict(lambdas=[0.5], c_values=[0]),
    dict(lambdas=[0.5], c_values=[1], runs_per_cell=0),
])
def test_sweep_config_validation(kwargs):
    kwargs.setdefault("runs_per_cell", 1)
    with pytest.raises(InvalidConfig):
        SweepConfig(n_agents=10, **kwargs)


def fake_cell(lam, c, **means):
    mean = {k: 0.0 for k in ("t_conv", "max_nd", "t_max_nd", "max_nw", "t_max_nw")}
    mean.update(means)
    return SweepCell(lam, c, 100, 10, 10, 10, mean, {k: 1.0 for k in mean})


def test_find_peak_lambda():
    cells = [fake_cell(0.0, 5, t_conv=10), fake_cell(0.5, 5, t_conv=30),
             fake_cell(1.0, 5, t_conv=30), fake_cell(0.5, 1, t_conv=99)]
    assert find_peak_lambda(cells, "t_conv", 5) == 0.5
    with pytest.raises(InsufficientGrid):
        find_peak_lambda(cells, "t_conv", 1)
    with pytest.raises(ValueError):
        find_peak_lambda(cells, "max_nd", 5)


def test_peak_lambda_on_real_sweep():
    cells = run_sweep(SweepConfig(100, [0.0, 0.25, 0.5, 0.75, 1.0], [1, 100], 200))
    assert find_peak_lambda(cells, "t_conv", 1) == 0.0
    assert find_peak_lambda(cells, "max_nw", 1) == 0.0
    assert 0.0 < find_peak_lambda(cells, "t_conv", 100) < 1.0


def test_check_bound():
    cells = [fake_cell(0.0, 500, max_nd=52.0), fake_cell(1.0, 5, max_nd=5.0),
             fake_cell(1.0, 5, max_nd=5.3)]
    reports = check_bound(cells)
    assert [r.satisfied for r in reports] == [True, True, False]
    assert reports[0].bound_value == 50.0


def test_trend_violations():
    cells = [fake_cell(0.0, 5, max_nd=50), fake_cell(0.5, 5, max_nd=40),
             fake_cell(1.0, 5, max_nd=45)]
    # sd = 1 over 10 runs: pooled se ~ 0.447, so +5 breaks a non-increasing trend
    bad = trend_violations(cells, "max_nd", "lambda", -1)
    assert len(bad) == 1 and bad[0].before.lam == 0.5
    assert trend_violations(cells, "max_nd", "lambda", -1, z=20) == []
