import csv

import numpy as np
import pytest
from hypothesis import given, strategies as st
from hypothesis.extra.numpy import arrays

from subband_wiener.bank import Bank, build_K
from subband_wiener.pr import pr_solution
from subband_wiener.runtime import (block, empirical_mse, ensemble_mse, run_pipeline,
                                    unblock)
from subband_wiener.stochastic import SignalModel, simulate
from subband_wiener.wiener import make_problem, solve
from conftest import random_ar, random_bank


@given(arrays(float, st.integers(0, 50), elements=st.floats(-1e6, 1e6)), st.integers(1, 8))
def test_block_round_trip(u, M):
    b = block(u, M)
    assert b.shape[1] == M
    np.testing.assert_array_equal(unblock(b, u.size), u)


def test_identity_system(rng):
    bank = Bank.from_filters([[1.0]], 1)
    sol = solve(make_problem(bank, SignalModel.white(), 1, 0))
    u = rng.standard_normal(50)
    run = run_pipeline(bank, sol, u)
    np.testing.assert_array_equal(run.u_hat, u)


@pytest.mark.parametrize("M,d", [(2, 0), (3, 2), (4, 5)])
def test_lazy_bank_pr_reconstructs_exactly(rng, M, d):
    bank = Bank.from_filters(np.eye(M), M)
    K = build_K(bank, 3)
    sol = pr_solution(K, d)
    u = rng.standard_normal(40 * M)
    run = run_pipeline(bank, sol, u, include_transient=True)
    shift = d + M - 1
    np.testing.assert_allclose(run.u_hat[shift:], u[:u.size - shift], atol=1e-14)
    assert run.max_error() <= 1e-14
    assert np.all(empirical_mse(run) <= 1e-18)


def _random_run(g, reference=False):
    bank = random_bank(g)
    P = int(g.integers(1, 5))
    sol = solve(make_problem(bank, random_ar(g), P, int(g.integers(0, 4))))
    return bank, sol


@pytest.mark.parametrize("seed", range(10))
def test_stacked_subbands_equal_K_times_observation(seed):
    g = np.random.default_rng(seed)
    bank, sol = _random_run(g)
    u = g.standard_normal(bank.M * 25)
    run = run_pipeline(bank, sol, u)
    K = build_K(bank, sol.P)
    for n in range(run.subbands.shape[1]):
        k = bank.M * n - np.arange(K.q)
        ubar = np.where(k >= 0, u[np.maximum(k, 0)], 0.0)
        np.testing.assert_allclose(run.stacked_observation(n), K.entries @ ubar, atol=1e-12)


@pytest.mark.parametrize("seed", range(5))
def test_reference_synthesis_matches_and_counts_LP(seed):
    g = np.random.default_rng(seed)
    bank, sol = _random_run(g)
    u = g.standard_normal(bank.M * 20)
    fast = run_pipeline(bank, sol, u)
    ref = run_pipeline(bank, sol, u, reference=True)
    np.testing.assert_allclose(ref.outputs, fast.outputs, atol=1e-12)
    assert ref.multiplies_per_sample == pytest.approx(bank.L * sol.P)


def test_pipeline_is_linear(rng):
    bank, sol = _random_run(rng)
    u1, u2 = rng.standard_normal((2, bank.M * 30))
    a = -1.7
    y = run_pipeline(bank, sol, a * u1 + u2).outputs
    y1 = run_pipeline(bank, sol, u1).outputs
    y2 = run_pipeline(bank, sol, u2).outputs
    np.testing.assert_allclose(y, a * y1 + y2, rtol=1e-12, atol=1e-12 * np.abs(y).max())


def test_dimension_mismatch(rng):
    bank = random_bank(rng, M=2, L=2, Q=3)
    other = random_bank(rng, M=2, L=3, Q=3)
    sol = solve(make_problem(other, SignalModel.white(), 2, 0))
    with pytest.raises(ValueError, match="shape"):
        run_pipeline(bank, sol, rng.standard_normal(20))
    with pytest.raises(ValueError, match="uniform"):
        run_pipeline(Bank.from_filters([[1.0], [1.0]], [2, 3]), sol, np.zeros(12))


def test_empirical_matches_analytic():
    g = np.random.default_rng(7)
    bank = random_bank(g, M=2, L=2, Q=4)
    model = SignalModel.ar([0.7, 0.1])
    sol = solve(make_problem(bank, model, 3, 2))
    run = run_pipeline(bank, sol, simulate(model, 400_000, g))
    np.testing.assert_allclose(empirical_mse(run), sol.channel_mse, rtol=0.05)


def test_transient_flag(tmp_path, rng):
    bank = random_bank(rng, M=2, L=2, Q=3)
    sol = solve(make_problem(bank, SignalModel.white(), 4, 0))
    run = run_pipeline(bank, sol, rng.standard_normal(100))
    assert run.transient_blocks == -(-(4 * 2 + 3) // 2)
    assert run.start == run.transient_blocks * 2
    run.to_csv(tmp_path / "ts.csv")
    rows = list(csv.reader(open(tmp_path / "ts.csv")))
    assert rows[0] == ["n", "u_hat", "error", "transient"]
    assert [int(r[3]) for r in rows[1:]].count(1) == run.start


def test_empirical_mse_needs_samples():
    bank = Bank.from_filters([[1.0]], 1)
    sol = solve(make_problem(bank, SignalModel.white(), 3, 0))
    run = run_pipeline(bank, sol, np.ones(3))
    with pytest.raises(ValueError, match="transient"):
        empirical_mse(run)


def test_ensemble_independent_of_workers(rng):
    bank = random_bank(rng, M=2, L=2, Q=3)
    model = SignalModel.ar([0.5])
    sol = solve(make_problem(bank, model, 2, 1))
    a = ensemble_mse(bank, sol, model, 6, 200, seed=3)
    b = ensemble_mse(bank, sol, model, 6, 200, seed=3, workers=3)
    np.testing.assert_array_equal(a[0], b[0])
    np.testing.assert_array_equal(a[1], b[1])
