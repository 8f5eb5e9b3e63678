import numpy as np
import pytest

import advfilt.common.ops as ops
from advfilt.attacks.creation import creation_rt
from advfilt.attacks.key import AttackKind, AttackSpec
from advfilt.channel.link import (
    ChannelParams,
    PowerAllocation,
    allocate_power,
    bob_recover_additive,
    bob_recover_filter,
    is_divergent,
    run_trial,
    transmit,
)
from advfilt.common import dsp
from advfilt.common.errors import InfeasibleError
from advfilt.signals.modulation import ModClass, generate_signal

IDENTITY = AttackSpec.filter([1.0])


def params(**kwargs) -> ChannelParams:
    defaults = dict(alpha=1.0, alpha_hat=1.0, noise_power=1.0, tx_power=5.0, snr_min_db=ops.linear_to_db(2.0))
    defaults.update(kwargs)
    return ChannelParams(**defaults)


def test_channel_params_validation():
    with pytest.raises(ValueError):
        params(alpha=0.0)
    with pytest.raises(ValueError):
        params(noise_power=-1.0)
    with pytest.raises(ValueError):
        params(tx_power=0.0)


def test_channel_params_from_db():
    p = ChannelParams.from_db(10.0, 5.0, 0.0, alpha=0.5, alpha_hat_ratio=1.2)
    assert p.tx_power == pytest.approx(10.0)
    assert p.noise_power == pytest.approx(10.0 ** 0.5)
    assert p.alpha_hat == pytest.approx(0.6)


def test_allocation_example():
    alloc = allocate_power(params(), AttackKind.ADDITIVE)
    assert alloc.signal_power == pytest.approx(2.0)
    assert alloc.perturbation_power == pytest.approx(3.0)
    assert alloc.signal_power + alloc.perturbation_power == pytest.approx(5.0, abs=1e-12)


def test_filter_allocation_takes_no_perturbation_power():
    assert allocate_power(params(), AttackKind.FILTER) == PowerAllocation(5.0, 0.0)


def test_starvation_point():
    alloc = allocate_power(params(tx_power=2.0), AttackKind.ADDITIVE)
    assert alloc.perturbation_power == pytest.approx(0.0, abs=1e-12)


@pytest.mark.parametrize("kind", [AttackKind.ADDITIVE, AttackKind.FILTER])
def test_infeasible_requirement(kind):
    with pytest.raises(InfeasibleError):
        allocate_power(params(tx_power=1.0), kind)


def test_noiseless_identity_filter_is_scaled_signal():
    s = generate_signal(ModClass.QPSK, 128, 1)
    p = params(noise_power=0.0)
    tx = transmit(s, IDENTITY, allocate_power(p, AttackKind.FILTER), p, seed=0)
    np.testing.assert_array_equal(tx.received, tx.signal)
    assert dsp.mean_sample_power(tx.signal) == pytest.approx(5.0)


def test_filter_block_lengths_and_eve_window(rng):
    s = generate_signal(ModClass.PSK8, 128, 2)
    taps = creation_rt(rng.standard_normal(4) + 1j * rng.standard_normal(4))
    p = params(noise_power=0.0, alpha=0.7)
    tx = transmit(s, AttackSpec.filter(taps), allocate_power(p, AttackKind.FILTER), p, seed=0)
    assert tx.received.size == 128 + 4
    assert tx.eve_window.size == 128
    np.testing.assert_allclose(tx.eve_window, 0.7 * dsp.conv_same(tx.signal, taps), atol=1e-12)


def test_noise_power():
    p = params(noise_power=3.0, tx_power=100.0)
    s = np.exp(1j * np.linspace(0.0, 50.0, 100000))
    tx = transmit(s, IDENTITY, allocate_power(p, AttackKind.FILTER), p, seed=9)
    assert np.mean(np.abs(tx.noise) ** 2) == pytest.approx(3.0, rel=0.02)
    assert np.var(tx.noise.real) == pytest.approx(1.5, rel=0.03)


def test_transmit_is_seeded():
    s = generate_signal(ModClass.BPSK, 64, 0)
    p = params()
    alloc = allocate_power(p, AttackKind.FILTER)
    first, second = transmit(s, IDENTITY, alloc, p, 4), transmit(s, IDENTITY, alloc, p, 4)
    np.testing.assert_array_equal(first.received, second.received)


def test_additive_power_budget_in_expectation(rng):
    p = params(tx_power=8.0)
    additive_powers = []
    for seed in range(200):
        s = generate_signal(ModClass(seed % 4), 128, seed)
        delta = AttackSpec.additive(rng.standard_normal(128) + 1j * rng.standard_normal(128))
        tx = transmit(s, delta, allocate_power(p, AttackKind.ADDITIVE), p, seed)
        additive_powers.append(dsp.mean_sample_power(tx.sent))
    assert np.mean(additive_powers) == pytest.approx(8.0, rel=0.05)


@pytest.mark.parametrize("m", [1, 2, 5])
def test_filter_block_meets_power_budget(rng, m):
    p = params(tx_power=8.0)
    keys = [dsp.power_normalize(np.ones(m)), creation_rt(rng.standard_normal(m) + 1j * rng.standard_normal(m))]
    if m > 1:
        keys.append(dsp.power_normalize(rng.standard_normal(m) + 1j * rng.standard_normal(m)))
    for seed in range(40):
        s = generate_signal(ModClass(seed % 4), 128, seed)
        for taps in keys:
            tx = transmit(s, AttackSpec.filter(taps), allocate_power(p, AttackKind.FILTER), p, seed)
            assert abs(dsp.mean_sample_power(tx.sent) - 8.0) <= 1e-9 * 8.0
            np.testing.assert_allclose(tx.sent, dsp.conv_full(tx.signal, taps), atol=1e-12)


def test_additive_transmission_rejects_length_mismatch():
    s = generate_signal(ModClass.BPSK, 64, 0)
    p = params()
    with pytest.raises(ValueError):
        transmit(s, AttackSpec.additive(np.ones(32)), allocate_power(p, AttackKind.ADDITIVE), p, 0)


@pytest.mark.parametrize("ratio", [0.0, 0.8, 1.0, 1.2])
def test_additive_residual_identity(rng, ratio):
    s = generate_signal(ModClass.QAM16, 128, 5)
    p = params(alpha=0.9, alpha_hat=0.9 * ratio, tx_power=20.0)
    delta = AttackSpec.additive(rng.standard_normal(128) + 1j * rng.standard_normal(128))
    tx = transmit(s, delta, allocate_power(p, AttackKind.ADDITIVE), p, seed=3)
    recovered = bob_recover_additive(tx.received, tx.perturbation, p)
    clean = p.alpha * tx.signal + tx.noise
    np.testing.assert_allclose(recovered - clean, (p.alpha - p.alpha_hat) * tx.perturbation, atol=1e-12)
    if ratio == 0.0:
        np.testing.assert_array_equal(recovered, tx.received)


def test_noiseless_filter_round_trip(rng):
    p = params(noise_power=0.0, alpha=0.8)
    for seed in range(100):
        s = generate_signal(ModClass(seed % 4), 128, seed)
        taps = creation_rt(rng.standard_normal(4) + 1j * rng.standard_normal(4))
        tx = transmit(s, AttackSpec.filter(taps), allocate_power(p, AttackKind.FILTER), p, seed)
        recovered, diverged = bob_recover_filter(tx.received, taps, p)
        assert not diverged
        assert np.max(np.abs(recovered - 0.8 * tx.signal)) < 1e-8


def test_filter_snr_at_bob_input(rng):
    p = params(noise_power=ops.db_to_linear(5.0), tx_power=ops.db_to_linear(15.0), snr_min_db=0.0)
    taps = creation_rt(rng.standard_normal(4) + 1j * rng.standard_normal(4))
    snr_db = []
    for seed in range(1000):
        s = generate_signal(ModClass(seed % 4), 128, seed)
        tx = transmit(s, AttackSpec.filter(taps), allocate_power(p, AttackKind.FILTER), p, seed)
        received_power = p.alpha ** 2 * dsp.mean_sample_power(tx.sent)
        snr_db.append(ops.linear_to_db(received_power / dsp.mean_sample_power(tx.noise)))
    assert abs(np.mean(snr_db) - ops.linear_to_db(p.max_snr)) < 0.5


def test_recovered_snr_reflects_noise_enhancement(small_classifier):
    p = params(noise_power=0.1, tx_power=10.0, snr_min_db=0.0)
    taps = dsp.power_normalize([1.0, 0.5])
    results = []
    for seed in range(1000):
        s = generate_signal(ModClass(seed % 4), 64, seed)
        results.append(run_trial(small_classifier, small_classifier, s, seed % 4, AttackSpec.filter(taps), p, seed))
    input_db = np.mean([r.snr_db for r in results])
    recovered_db = np.mean([r.recovered_snr_db for r in results])
    expected_db = np.mean([r.expected_recovered_snr_db for r in results])
    assert abs(input_db - ops.linear_to_db(p.max_snr)) < 0.5
    assert abs(recovered_db - expected_db) < 0.5
    assert expected_db < input_db


def test_additive_expected_recovered_snr_is_the_requirement(small_classifier):
    p = params(alpha=0.5, alpha_hat=0.5, noise_power=1.0, tx_power=10.0)
    delta = AttackSpec.additive(np.ones(64, dtype=np.complex128))
    result = run_trial(small_classifier, small_classifier, generate_signal(ModClass.BPSK, 64, 0), 0, delta, p, 0)
    assert result.expected_recovered_snr_db == pytest.approx(p.snr_min_db)


def test_attenuation_is_an_amplitude(small_classifier):
    p = params(alpha=0.5, noise_power=1.0, tx_power=10.0)
    assert p.max_snr == pytest.approx(2.5)
    assert allocate_power(p, AttackKind.ADDITIVE) == pytest.approx((8.0, 2.0))
    with pytest.raises(InfeasibleError):
        allocate_power(params(alpha=0.5, noise_power=1.0, tx_power=7.0), AttackKind.ADDITIVE)
    delta = AttackSpec.additive(np.ones(64, dtype=np.complex128))
    snr_db = []
    for seed in range(500):
        s = generate_signal(ModClass(seed % 4), 64, seed)
        snr_db.append(run_trial(small_classifier, small_classifier, s, seed % 4, delta, p, seed).snr_db)
    assert abs(np.mean(snr_db) - p.snr_min_db) < 0.5


def test_non_minimum_phase_inverse_diverges():
    s = generate_signal(ModClass.QPSK, 128, 0)
    p = params(noise_power=0.01)
    taps = np.array([0.5, 1.0])
    tx = transmit(s, AttackSpec.filter(taps), allocate_power(p, AttackKind.FILTER), p, 0)
    assert bob_recover_filter(tx.received, taps, p).diverged


def test_zero_leading_tap_has_no_inverse():
    with pytest.raises(ZeroDivisionError):
        bob_recover_filter(np.ones(10), [0.0, 1.0])


def test_is_divergent():
    assert not is_divergent(np.ones(16))
    assert is_divergent(np.array([1.0, np.inf, 1.0, 1.0]))
    assert is_divergent(2.0 ** np.arange(64))


def test_identity_key_gives_bob_and_eve_the_same_input(small_classifier):
    s = generate_signal(ModClass.PSK8, 64, 3)
    p = params(noise_power=0.5)
    tx = transmit(s, IDENTITY, allocate_power(p, AttackKind.FILTER), p, 7)
    recovered, _ = bob_recover_filter(tx.received, IDENTITY.taps, p)
    np.testing.assert_allclose(recovered, tx.eve_window, rtol=0, atol=1e-15)
    result = run_trial(small_classifier, small_classifier, s, 2, IDENTITY, p, 7, attack_id="clean")
    assert result.eve_correct == result.bob_correct
    assert result.attack_id == "clean" and result.seed == 7
    assert result.snr_db == pytest.approx(result.recovered_snr_db)


def test_run_trial_additive_ledger(small_classifier):
    s = generate_signal(ModClass.QAM16, 64, 3)
    p = params()
    delta = AttackSpec.additive(np.ones(64, dtype=np.complex128))
    result = run_trial(small_classifier, small_classifier, s, 3, delta, p, 11)
    assert isinstance(result.eve_correct, bool) and isinstance(result.bob_correct, bool)
    assert np.isfinite(result.snr_db) and not result.diverged
    assert result.snr_db == pytest.approx(result.recovered_snr_db)
