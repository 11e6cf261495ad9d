import json

import numpy as np
import pytest

from subband_wiener.bank import Bank, build_K, elt_bank
from subband_wiener.pr import (DelayOutOfRangeError, PRInfeasibleError, check_pseudocirculant,
                               nullspace_structure_check, polyphase_product, pr_feasibility,
                               pr_solution, reconstruction_delay)
from conftest import random_bank


def brute_force_polyphase(bank, rows, P):
    """sum_r a_{i,r} * e_{r,j} with e_{r,j}(n) = h_r(Mn + j)."""
    M, L, Q = bank.M, bank.L, bank.Q
    T = -(-Q // M)
    a = rows.reshape(-1, L, P)
    out = np.zeros((a.shape[0], M, P + T - 1))
    for i in range(a.shape[0]):
        for j in range(M):
            for r, h in enumerate(bank.filters):
                e = np.zeros(T)
                part = h[j::M]
                e[:part.size] = part
                out[i, j] += np.convolve(a[i, r], e)
    return out


@pytest.mark.parametrize("seed", range(30))
def test_polyphase_product_matches_brute_force(seed):
    g = np.random.default_rng(seed)
    bank = random_bank(g)
    P = int(g.integers(1, 6))
    K = build_K(bank, P)
    rows = g.standard_normal((bank.M, bank.L * P))
    pp = polyphase_product(K, rows)
    np.testing.assert_allclose(pp.p, brute_force_polyphase(bank, rows, P), atol=1e-10)


def test_lazy_bank_is_feasible_everywhere():
    M = 3
    bank = Bank.from_filters(np.eye(M), M)
    K = build_K(bank, 2)
    cert = pr_feasibility(K)
    assert cert.feasible and cert.pseudocirculant_pass
    assert cert.delay_range == list(range(0, K.q - M + 1))


def test_oversampled_generic_bank_is_feasible(rng):
    # L P >= q and K of full column rank: pinv(K) K = I
    bank = random_bank(rng, M=2, L=4, Q=5)
    K = build_K(bank, 3)
    cert = pr_feasibility(K)
    assert cert.feasible and cert.r == K.q and cert.p == 0


def test_critically_sampled_generic_bank_is_infeasible(rng):
    bank = random_bank(rng, M=2, L=2, Q=6)
    cert = pr_feasibility(build_K(bank, 3))
    assert not cert.feasible and cert.delay_range == []
    with pytest.raises(PRInfeasibleError):
        pr_solution(build_K(bank, 3), 0)


@pytest.mark.parametrize("c", [1.0, -2.5])
def test_pr_solution_is_a_scaled_selector(c):
    K = build_K(elt_bank(4), 4)
    sol = pr_solution(K, 12, c=c)
    s = sol.rows @ K.entries
    target = np.zeros_like(s)
    target[np.arange(4), 12 + np.arange(4)] = c
    np.testing.assert_allclose(s, target, atol=1e-10)
    chk = check_pseudocirculant(s)
    assert chk.passed and chk.agree and chk.d0 == 12 and chk.c == pytest.approx(c)
    assert reconstruction_delay(chk, 4) == 15
    with pytest.raises(DelayOutOfRangeError):
        pr_solution(K, 11)


def test_pr_solution_family_shares_selectors(rng):
    bank = random_bank(rng, M=2, L=4, Q=3)
    K = build_K(bank, 3)
    a = pr_solution(K, 1)
    b = pr_solution(K, 1, w=rng.standard_normal(K.shape[0]))
    np.testing.assert_allclose(a.rows @ K.entries, b.rows @ K.entries, atol=1e-10)
    assert not np.allclose(a.rows, b.rows)


def test_disjoint_zero_bands_reported():
    bank = Bank.from_filters([[1, 0, 0, 0, 0, 0], [0, 0, 0, 0, 0, 1.0]], 1)
    cert = pr_feasibility(build_K(bank, 1))
    assert cert.feasible and cert.multiple_intervals
    assert cert.delay_range == [0, 5]
    assert "several disjoint" in cert.to_text()
    d = json.loads(cert.to_json())
    assert d["delay_range"] == [0, 5] and d["multiple_intervals"]


def _cases(g, tol):
    for _ in range(100):
        M = int(g.integers(1, 5))
        q = M + int(g.integers(0, 10))
        d0 = int(g.integers(0, q - M + 1))
        c = g.choice([-1, 1]) * g.uniform(0.1, 10)
        s = np.zeros((M, q))
        s[np.arange(M), d0 + np.arange(M)] = c
        kind = g.integers(0, 5)
        if kind == 1:  # noise right around the threshold
            s += g.choice([0.5, 0.99, 1.01, 2.0]) * tol * abs(c) * g.choice([-1, 1], s.shape) \
                * (g.random(s.shape) < 0.2)
        elif kind == 2:  # generic matrix
            s = g.standard_normal((M, q))
        elif kind == 3 and M > 1:  # one row misaligned
            s[M - 1] = np.roll(s[M - 1], 1 if d0 + M < q else -1)
        elif kind == 4:  # wrong scale on one row
            s[g.integers(0, M)] *= 1 + 10 * tol * g.choice([-1, 1])
        yield s


def test_pseudocirculant_paths_agree():
    tol = 1e-8
    g = np.random.default_rng(99)
    results = [check_pseudocirculant(s, tol) for s in _cases(g, tol)]
    assert all(r.agree for r in results)
    assert 0 < sum(r.passed for r in results) < len(results)


def test_nullspace_vanishes_on_zero_band():
    K = build_K(elt_bank(4), 4)
    cert = pr_feasibility(K)
    assert np.linalg.matrix_rank(K.entries) < K.q
    assert cert.zero_runs == [(12, 4)]
    assert nullspace_structure_check(K, cert)
