import itertools

import mpmath as mp
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from conftest import exact_bit_channel_llrs, forced_path_llrs
from perturbpolar import CodeConfig, CrcSpec, crc_encode, encode
from perturbpolar.channel import llr_from_channel, modulate_bpsk
from perturbpolar.construction import build_code
from perturbpolar.decoders import (ca_scl_decode, f_exact, f_op, g_op, hard_decision, sc_decode,
                                   scl_decode)


def random_llr(rng, N, sigma2=0.8, u=None):
    x = np.ones(N) if u is None else modulate_bpsk(encode(u))
    return llr_from_channel(x + np.sqrt(sigma2) * rng.standard_normal(N), sigma2)


# --- node operations ---------------------------------------------------------------

def test_f_examples():
    assert f_op(2.0, 3.0) == 2.0
    assert f_op(-1.0, 0.5) == -0.5
    assert f_op(0.0, 7.0) == 0.0 and f_op(0.0, -7.0) == 0.0


@settings(max_examples=200)
@given(st.floats(-50, 50), st.floats(-50, 50))
def test_f_exact_matches_definition(a, b):
    mp.mp.dps = 50
    ref = float(2 * mp.atanh(mp.tanh(mp.mpf(a) / 2) * mp.tanh(mp.mpf(b) / 2)))
    assert f_exact(a, b) == pytest.approx(ref, abs=1e-9)
    assert abs(f_exact(a, b)) <= min(abs(a), abs(b)) + 1e-12
    assert f_exact(a, b) == pytest.approx(f_exact(b, a), rel=1e-15, abs=0)


def test_f_exact_large_magnitudes():
    # stable far beyond where tanh saturates
    assert f_exact(800.0, 900.0) == pytest.approx(800.0, abs=1e-6)
    assert f_exact(-800.0, 40.0) == pytest.approx(-40.0, abs=1e-6)


def test_g_examples():
    assert g_op(2.0, 3.0, 0) == 5.0
    assert g_op(2.0, 3.0, 1) == 1.0
    assert g_op(4.5, -4.5, 0) == 0.0


def test_hard_decision_examples():
    assert hard_decision(-0.1) == 1
    assert hard_decision(3.0) == 0
    assert hard_decision(0.0) == 0


# --- SC ------------------------------------------------------------------------------

def test_sc_near_noiseless_recovers_message(rng):
    cfg = CodeConfig(3, 4, [3, 5, 6, 7])
    for _ in range(20):
        u = cfg.message_to_u(rng.integers(0, 2, 4))
        llr = 1000.0 * modulate_bpsk(encode(u))
        np.testing.assert_array_equal(sc_decode(llr, cfg).u_hat, u)


@pytest.mark.parametrize("info", [list(range(8)), [3, 5, 6, 7], [1, 2, 3, 5, 6, 7]])
def test_sc_exact_matches_marginalization_oracle(info, rng):
    cfg = CodeConfig(3, len(info), info)
    for _ in range(30):
        llr = random_llr(rng, 8, sigma2=1.2)
        res = sc_decode(llr, cfg, exact_f=True)
        ref = exact_bit_channel_llrs(llr, cfg.frozen_mask, res.u_hat)
        np.testing.assert_allclose(res.decision_llrs, ref, atol=1e-9, rtol=0)


def test_sc_minsum_signs_agree_with_exact(rng):
    cfg = CodeConfig(3, 8, range(8))
    agree = total = 0
    for _ in range(300):
        llr = random_llr(rng, 8, sigma2=0.5)
        res = sc_decode(llr, cfg)
        ref = exact_bit_channel_llrs(llr, cfg.frozen_mask, res.u_hat)
        agree += int(np.all(np.sign(res.decision_llrs) == np.sign(ref)))
        total += 1
    assert agree / total >= 0.99


def test_sc_negating_hook_complements_each_decision(rng):
    # every decision is the complement of the hard decision on the LLR that
    # SC computes from the hook-modified past; only bit 0 shares its LLR with
    # the plain decoder
    cfg = CodeConfig(4, 16, range(16))
    for _ in range(50):
        llr = random_llr(rng, 16)
        plain = sc_decode(llr, cfg)
        neg = sc_decode(llr, cfg, hook=lambda i, L: -L)
        L = forced_path_llrs(llr, neg.u_hat)
        np.testing.assert_allclose(neg.decision_llrs, -L, atol=1e-12)
        np.testing.assert_array_equal(neg.u_hat, (L > 0).astype(np.uint8))
        if plain.decision_llrs[0] != 0:
            assert neg.u_hat[0] == 1 - plain.u_hat[0]


@settings(max_examples=40, deadline=None)
@given(st.integers(1, 8), st.integers(0, 2**32 - 1))
def test_python_hook_path_matches_kernel(n, seed):
    rng = np.random.default_rng(seed)
    N = 1 << n
    cfg = CodeConfig(n, N // 2, rng.choice(N, N // 2, replace=False))
    llr = random_llr(rng, N, sigma2=1.0)
    offsets = rng.standard_normal(N)
    fast = sc_decode(llr, cfg, hook=offsets)
    slow = sc_decode(llr, cfg, hook=lambda i, L: L + offsets[i])
    np.testing.assert_array_equal(fast.u_hat, slow.u_hat)
    np.testing.assert_allclose(fast.decision_llrs, slow.decision_llrs, rtol=1e-12, atol=1e-12)


def test_sc_frozen_bits_are_zero(rng):
    cfg = build_code(7, 40, 0.6)
    for _ in range(50):
        u = sc_decode(random_llr(rng, 128, 2.0), cfg).u_hat
        assert not u[cfg.frozen_mask].any()


def test_sc_rejects_wrong_length():
    with pytest.raises(ValueError):
        sc_decode(np.zeros(7), CodeConfig(3, 1, [7]))


# --- SCL ------------------------------------------------------------------------------

def path_metric_oracle(llr, u):
    L = forced_path_llrs(llr, u)
    wrong = (L < 0).astype(np.uint8) != u
    return float(np.abs(L[wrong]).sum())


def test_scl_exhaustive_list_at_n8(rng):
    cfg = CodeConfig(3, 4, [3, 5, 6, 7])
    for _ in range(30):
        llr = random_llr(rng, 8, sigma2=1.5)
        paths = scl_decode(llr, cfg, 16)
        assert len(paths) == 16
        seen = {tuple(u[cfg.info_set]) for u, _ in paths}
        assert len(seen) == 16
        metrics = {}
        for bits in itertools.product([0, 1], repeat=4):
            u = cfg.message_to_u(bits)
            metrics[bits] = path_metric_oracle(llr, u)
        for u, m in paths:
            assert m == pytest.approx(metrics[tuple(u[cfg.info_set])], abs=1e-9)
        best = min(metrics.values())
        assert paths[0][1] == pytest.approx(best, abs=1e-12)
        assert all(a[1] <= b[1] for a, b in zip(paths, paths[1:]))


@pytest.mark.parametrize("n", [4, 6])
def test_scl_list_one_equals_sc(n, rng):
    cfg = build_code(n, (1 << n) // 2, 0.7)
    for _ in range(1000):
        llr = random_llr(rng, 1 << n, sigma2=1.0)
        (u, _), = scl_decode(llr, cfg, 1)
        np.testing.assert_array_equal(u, sc_decode(llr, cfg).u_hat)


def test_scl_noiseless_metric_zero(rng):
    cfg = build_code(6, 32, 0.5)
    u = cfg.message_to_u(rng.integers(0, 2, 32))
    llr = 50.0 * modulate_bpsk(encode(u))
    u0, m0 = scl_decode(llr, cfg, 8)[0]
    np.testing.assert_array_equal(u0, u)
    assert m0 == 0.0


def test_scl_beats_sc_on_average():
    rng = np.random.default_rng(11)
    cfg = build_code(7, 64, 0.6)
    sc_err = scl_err = 0
    for _ in range(400):
        u = cfg.message_to_u(rng.integers(0, 2, 64))
        llr = random_llr(rng, 128, sigma2=0.6, u=u)
        sc_err += int(not np.array_equal(sc_decode(llr, cfg).u_hat, u))
        scl_err += int(not np.array_equal(scl_decode(llr, cfg, 8)[0][0], u))
    assert scl_err <= sc_err


# --- CA-SCL ------------------------------------------------------------------------------

CRC3 = CrcSpec((3, 1, 0))


def test_ca_scl_picks_only_passing_path(rng, monkeypatch):
    cfg = CodeConfig(3, 5, [3, 4, 5, 6, 7], CRC3)
    good = cfg.message_to_u(crc_encode([1, 0], CRC3))
    bad = [cfg.message_to_u([1, 1, 1, 1, 1]), cfg.message_to_u([0, 1, 0, 0, 0])]
    fake = [(bad[0], 0.0), (bad[1], 0.5), (good, 3.0)]
    import perturbpolar.decoders as dec
    monkeypatch.setattr(dec, "scl_decode", lambda *a, **k: fake)
    res = ca_scl_decode(np.zeros(8), cfg, 4)
    np.testing.assert_array_equal(res.u_hat, good)
    assert res.crc_pass and res.path_metric == 3.0
    monkeypatch.setattr(dec, "scl_decode", lambda *a, **k: fake[:2])
    res = ca_scl_decode(np.zeros(8), cfg, 4)
    np.testing.assert_array_equal(res.u_hat, bad[0])
    assert res.crc_pass is False


def test_ca_scl_noiseless(rng):
    crc = CrcSpec()
    cfg = build_code(7, 64, 0.5, crc)
    payload = rng.integers(0, 2, cfg.payload_size, dtype=np.uint8)
    u = cfg.message_to_u(crc_encode(payload, crc))
    res = ca_scl_decode(20.0 * modulate_bpsk(encode(u)), cfg, 8)
    assert res.crc_pass
    np.testing.assert_array_equal(res.u_hat, u)


def test_ca_scl_requires_crc():
    with pytest.raises(ValueError):
        ca_scl_decode(np.zeros(8), CodeConfig(3, 4, [3, 5, 6, 7]), 4)
