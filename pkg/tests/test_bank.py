import json

import numpy as np
import pytest
from scipy.signal import firwin, lfilter

from subband_wiener.bank import (Bank, BankConfigError, build_K, design_highpass,
                                 design_lowpass, elt_bank, elt_window, load_bank,
                                 nufb_to_ufb, pad_to_common_length)
from conftest import random_bank


def _observation(u, M, q, n):
    """[u(Mn), u(Mn-1), ..., u(Mn-q+1)] with u = 0 before time 0."""
    k = M * n - np.arange(q)
    return np.where(k >= 0, u[np.maximum(k, 0)], 0.0)


@pytest.mark.parametrize("seed", range(20))
def test_K_maps_observation_to_stacked_subbands(seed):
    g = np.random.default_rng(seed)
    bank = random_bank(g)
    P = int(g.integers(1, 6))
    K = build_K(bank, P)
    M = bank.M
    u = g.standard_normal(M * 30)
    v = np.array([lfilter(h, [1.0], u)[::M] for h in bank.filters])
    for n in range(v.shape[1]):
        idx = n - np.arange(P)
        vs = np.where(idx >= 0, v[:, np.maximum(idx, 0)], 0.0).reshape(-1)
        np.testing.assert_allclose(K.entries @ _observation(u, M, K.q, n), vs, atol=1e-12)


def test_K_layout():
    h = [np.array([1.0, 2.0, 3.0]), np.array([4.0, 5.0, 6.0])]
    K = build_K(Bank.from_filters(h, 2), 3)
    assert K.shape == (6, 2 * 2 + 3)
    for j in range(2):
        for p in range(3):
            row = np.zeros(K.q)
            row[2 * p:2 * p + 3] = h[j]
            np.testing.assert_array_equal(K.entries[j * 3 + p], row)
    np.testing.assert_array_equal(K.block(1), K.entries[3:])


def test_K_rejects_nonuniform():
    with pytest.raises(ValueError, match="uniform"):
        build_K(Bank.from_filters([[1.0], [1.0]], [2, 3]), 2)


def test_padding_keeps_bank_response():
    b = Bank.from_filters([[1.0, 2.0], [3.0, 4.0, 5.0, 6.0]], 2)
    p = pad_to_common_length(b)
    assert p.Q == 4 and all(len(c.taps) == 4 for c in p.channels)
    assert p.filters[0].tolist() == [1, 2, 0, 0]


@pytest.mark.parametrize("seed", range(5))
def test_nufb_blocking_reproduces_subbands(seed):
    g = np.random.default_rng(seed)
    decs = [2, 3, 6]
    bank = Bank.from_filters([g.standard_normal(int(g.integers(2, 8))) for _ in decs], decs)
    ufb = nufb_to_ufb(bank)
    assert ufb.is_uniform and ufb.M == 6 and ufb.L == 3 + 2 + 1
    u = g.standard_normal(600)
    k = 0
    for h, Mi in zip(bank.filters, decs):
        full = lfilter(h, [1.0], u)
        for l in range(6 // Mi):
            # copy l sees h_i(n - l M_i): its n-th sample is v_i(6n/M_i - l)
            got = lfilter(ufb.filters[k], [1.0], u)[::6]
            n = np.arange(len(got))
            src = 6 * n - l * Mi
            ref = np.where(src >= 0, full[np.maximum(src, 0)], 0.0)
            np.testing.assert_allclose(got, ref, atol=1e-12)
            k += 1


@pytest.mark.parametrize("cutoff,length", [(0.6, 10), (0.6, 11), (0.3, 25), (0.5, 8)])
def test_lowpass_matches_firwin(cutoff, length):
    np.testing.assert_allclose(design_lowpass(cutoff, length),
                               firwin(length, cutoff, window="hamming"), atol=1e-13)


@pytest.mark.parametrize("cutoff,length", [(0.4, 11), (0.4, 9), (0.7, 21)])
def test_highpass_matches_firwin(cutoff, length):
    ref = firwin(length, cutoff, window="hamming", pass_zero=False)
    np.testing.assert_allclose(design_highpass(cutoff, length), ref, atol=1e-13)


def test_highpass_rejects_even_length():
    with pytest.raises(ValueError, match="odd"):
        design_highpass(0.4, 10)


def test_elt_window_symmetric_and_power_complementary():
    M = 4
    for w in (elt_window(M), elt_window(M, [(0.3, 1.1), (-0.7, 0.4)])):
        assert w.size == 4 * M
        np.testing.assert_allclose(w, w[::-1], atol=1e-15)
        # sum over the four polyphase samples of each pair is one
        for k in range(M // 2):
            idx = k + M * np.arange(4)
            np.testing.assert_allclose(np.sum(w[idx] ** 2), 1.0, atol=1e-12)


def test_elt_bank_is_paraunitary():
    # The stacked polyphase matrix of an orthogonal lapped transform is
    # paraunitary: the analysis filters and their M-shifts are orthonormal.
    b = elt_bank(4)
    H = np.array(b.filters)
    N = H.shape[1]
    for s in range(-3, 4):
        G = np.zeros((4, 4))
        for i in range(4):
            for j in range(4):
                a = np.zeros(N + 32)
                c = np.zeros(N + 32)
                a[16:16 + N] = H[i]
                c[16 + 4 * s:16 + 4 * s + N] = H[j]
                G[i, j] = a @ c
        np.testing.assert_allclose(G, np.eye(4) if s == 0 else 0, atol=1e-7)


def _write(tmp_path, obj, name="bank.json"):
    p = tmp_path / name
    p.write_text(obj if isinstance(obj, str) else json.dumps(obj))
    return p


def test_load_bank_variants(tmp_path):
    b = load_bank(_write(tmp_path, {"channels": [
        {"taps": [1, 2], "decimation": 2},
        {"design": "highpass", "cutoff": 0.4, "length": 11, "decimation": 2}]}))
    assert b.L == 2 and b.Q == 11
    (tmp_path / "t.csv").write_text("tap0,tap1\n1,2\n3,4,5\n")
    b = load_bank(_write(tmp_path, {"csv": "t.csv", "decimations": [2, 3]}))
    assert tuple(b.decimations) == (2, 3) and b.filters[1].tolist() == [3, 4, 5]
    b = load_bank(_write(tmp_path, {"elt": {"M": 4}}))
    assert b.L == 4 and b.Q == 16


@pytest.mark.parametrize("cfg,msg", [
    ({"channels": []}, "channels"),
    ({"channels": [{"taps": [1], "decimation": 0}]}, r"channels\[0\].decimation"),
    ({"channels": [{"taps": [1], "decimation": 2}, {"decimation": 2}]}, r"channels\[1\]"),
    ({"channels": [{"design": "lowpass", "decimation": 2}]}, r"channels\[0\].cutoff"),
    ({"channels": [{"taps": ["x"], "decimation": 2}]}, r"channels\[0\]"),
])
def test_config_errors_name_the_field(tmp_path, cfg, msg):
    with pytest.raises(BankConfigError, match=msg):
        load_bank(_write(tmp_path, cfg))


def test_config_json_error_has_position(tmp_path):
    p = _write(tmp_path, '{"channels": [\n  {"taps": [1,], "decimation": 2}]}')
    with pytest.raises(BankConfigError, match=r"bank.json:2:\d+"):
        load_bank(p)


def test_K_small_cases():
    K = build_K(Bank.from_filters([[1.0]], 1), 3)
    np.testing.assert_array_equal(K.entries, np.eye(3))
    lazy = build_K(Bank.from_filters([[1.0, 0.0], [0.0, 1.0]], 2), 2)
    assert lazy.shape == (4, 4) and np.linalg.matrix_rank(lazy.entries) == 4


def test_closed_form_elt_window_gives_same_delay_range():
    from subband_wiener.pr import pr_feasibility
    cert = pr_feasibility(build_K(elt_bank(4, elt_window(4)), 4))
    assert cert.delay_range == [12]
