"""Alice -> AWGN channel -> {Bob, Eve} for one signal.

All powers are per-sample means. The attenuation ``alpha`` scales the
transmitted amplitude; Bob knows the attack key but only an estimate
``alpha_hat`` of the attenuation.
"""
import logging
from dataclasses import dataclass
from typing import NamedTuple, Optional

import numpy as np

import advfilt.common.ops as ops
import advfilt.common.types as t
from advfilt.attacks.key import AttackKind, AttackSpec
from advfilt.common import dsp
from advfilt.common.errors import InfeasibleError
from advfilt.common.normalizer import normalize_input
from advfilt.networks.classifier import Classifier

logger = logging.getLogger(__name__)

DIVERGENCE_RATIO = 1e3


@dataclass(frozen=True)
class ChannelParams:
    alpha: float = 1.0
    alpha_hat: float = 1.0
    noise_power: float = 1.0
    tx_power: float = 1.0
    snr_min_db: float = 0.0

    def __post_init__(self):
        if self.alpha <= 0.0:
            raise ValueError("attenuation must be positive, got {}".format(self.alpha))
        if self.noise_power < 0.0:
            raise ValueError("noise power must be non-negative, got {}".format(self.noise_power))
        if self.tx_power <= 0.0:
            raise ValueError("transmit power must be positive, got {}".format(self.tx_power))

    @classmethod
    def from_db(
        cls,
        tx_power_db: float,
        noise_power_db: float,
        snr_min_db: float,
        alpha: float = 1.0,
        alpha_hat_ratio: float = 1.0,
    ) -> "ChannelParams":
        return cls(
            alpha=alpha,
            alpha_hat=alpha * alpha_hat_ratio,
            noise_power=ops.db_to_linear(noise_power_db),
            tx_power=ops.db_to_linear(tx_power_db),
            snr_min_db=snr_min_db,
        )

    @property
    def snr_min(self) -> float:
        return ops.db_to_linear(self.snr_min_db)

    @property
    def max_snr(self) -> float:
        """SNR at Bob's input when all of P_T carries the signal.

        ``alpha`` is an amplitude gain, so received signal power is
        ``alpha ** 2`` times the transmitted power.
        """
        if self.noise_power == 0.0:
            return float("inf")
        return self.alpha ** 2 * self.tx_power / self.noise_power


class PowerAllocation(NamedTuple):
    signal_power: float
    perturbation_power: float


def allocate_power(p: ChannelParams, kind: AttackKind) -> PowerAllocation:
    """Just enough power for Bob's SNR requirement, the rest to the perturbation."""
    if p.max_snr < p.snr_min:
        raise InfeasibleError(
            "SNR requirement {:g} dB unreachable: alpha^2 * P_T / P_N = {:.3f} dB".format(
                p.snr_min_db, ops.linear_to_db(p.max_snr)
            )
        )
    if kind == AttackKind.FILTER:
        return PowerAllocation(p.tx_power, 0.0)
    signal_power = min(p.snr_min * p.noise_power / p.alpha ** 2, p.tx_power)
    return PowerAllocation(signal_power, p.tx_power - signal_power)


@dataclass(frozen=True)
class Transmission:
    """One block through the channel.

    ``received = alpha * sent + noise``; ``eve_window`` is the d samples Eve
    classifies and ``signal`` is Alice's power-scaled clean signal.
    """

    signal: np.ndarray
    sent: np.ndarray
    noise: np.ndarray
    received: np.ndarray
    eve_window: np.ndarray
    perturbation: Optional[np.ndarray] = None


def _scaled(s: np.ndarray, power: float) -> np.ndarray:
    current = dsp.mean_sample_power(s)
    if current == 0.0:
        raise ValueError("cannot scale an all-zero signal")
    return s * np.sqrt(power / current)


def awgn(n: int, noise_power: float, rng: np.random.Generator) -> np.ndarray:
    """Circular complex Gaussian noise, variance ``noise_power / 2`` per component."""
    std = np.sqrt(noise_power / 2.0)
    return std * (rng.standard_normal(n) + 1j * rng.standard_normal(n))


def transmit(
    s: t.TData, attack: AttackSpec, alloc: PowerAllocation, p: ChannelParams, seed: t.TSeed
) -> Transmission:
    """Scale, attack and send one block.

    Filter blocks are scaled so the filtered output itself carries
    ``alloc.signal_power`` per sample; additive blocks meet the budget in
    expectation.
    """
    s = dsp.as_signal(s)
    d = s.size
    perturbation = None
    if attack.is_filter:
        if alloc.perturbation_power != 0.0:
            raise ValueError("filter attacks take no perturbation power")
        shaped_power = dsp.mean_sample_power(dsp.conv_full(s, attack.taps))
        if shaped_power == 0.0:
            raise ValueError("filter output is all zero")
        signal = s * np.sqrt(alloc.signal_power / shaped_power)
        sent = dsp.conv_full(signal, attack.taps)
        offset = dsp.same_offset(attack.taps.size)
    else:
        signal = _scaled(s, alloc.signal_power)
        if attack.values.size != d:
            raise ValueError(
                "perturbation length {} does not match signal length {}".format(attack.values.size, d)
            )
        perturbation = attack.scaled(alloc.perturbation_power).perturbation
        sent = signal + perturbation
        offset = 0
    noise = awgn(sent.size, p.noise_power, ops.make_rng(seed))
    received = p.alpha * sent + noise
    return Transmission(
        signal=signal,
        sent=sent,
        noise=noise,
        received=received,
        eve_window=received[offset:offset + d],
        perturbation=perturbation,
    )


def bob_recover_additive(received: t.TData, perturbation: t.TData, p: ChannelParams) -> np.ndarray:
    """r - alpha_hat * delta, which leaves (alpha - alpha_hat) * delta behind."""
    return dsp.as_signal(received) - p.alpha_hat * dsp.as_signal(perturbation, "perturbation")


class Recovery(NamedTuple):
    signal: np.ndarray
    diverged: bool


def is_divergent(x: np.ndarray) -> bool:
    if not np.all(np.isfinite(x)):
        return True
    quarter = max(x.size // 4, 1)
    head = np.mean(np.abs(x[:quarter]) ** 2)
    tail = np.mean(np.abs(x[-quarter:]) ** 2)
    return bool(tail > DIVERGENCE_RATIO * head)


def bob_recover_filter(received_full: t.TData, taps: t.TData, p: ChannelParams = None) -> Recovery:
    """First d samples of the IIR inverse run over the full d + m - 1 block.

    The result is ``alpha * signal`` plus colored noise; non-minimum-phase taps
    give a growing output, reported through ``diverged``.
    """
    received_full = dsp.as_signal(received_full)
    taps = dsp.as_signal(taps, "taps")
    d = received_full.size - taps.size + 1
    if d < 1:
        raise ValueError("received block is shorter than the filter")
    with np.errstate(over="ignore", invalid="ignore"):
        recovered = dsp.iir_inverse_apply(received_full, taps)[:d]
    diverged = is_divergent(recovered)
    if diverged:
        logger.warning("Bob's inverse filter diverged (taps %s)", np.round(taps, 4))
    return Recovery(recovered, diverged)


@dataclass(frozen=True)
class TrialResult:
    eve_correct: bool
    bob_correct: bool
    snr_db: float
    recovered_snr_db: float
    expected_recovered_snr_db: float = float("nan")
    attack_id: str = ""
    seed: int = 0
    diverged: bool = False


def _snr_db(signal: np.ndarray, impairment: np.ndarray) -> float:
    return _power_ratio_db(float(np.mean(np.abs(signal) ** 2)), float(np.mean(np.abs(impairment) ** 2)))


def _power_ratio_db(signal_power: float, impairment_power: float) -> float:
    if not np.isfinite(impairment_power):
        return float("-inf")
    if impairment_power == 0.0:
        return float("inf")
    return ops.linear_to_db(signal_power / impairment_power)


def expected_recovered_snr_db(reference: np.ndarray, taps: t.TData, p: ChannelParams) -> float:
    """Mean SNR after the inverse filter: input SNR less the averaged noise enhancement."""
    with np.errstate(over="ignore", invalid="ignore"):
        gain = dsp.inverse_noise_gain(taps, reference.size, average=True)
    return _power_ratio_db(dsp.mean_sample_power(reference), p.noise_power * gain)


def _classify(classifier: Classifier, x: np.ndarray, k: int) -> bool:
    if not np.all(np.isfinite(x)):
        return False
    try:
        x = normalize_input(x)
    except ValueError:
        return False
    return int(np.argmax(classifier.predict(x))) == int(k)


def run_trial(
    c_eve: Classifier,
    c_bob: Classifier,
    s: t.TData,
    k: int,
    attack: AttackSpec,
    p: ChannelParams,
    seed: int,
    attack_id: str = "",
) -> TrialResult:
    """One transmission; ``snr_db`` is the SNR at Bob's input, ``recovered_snr_db`` after his recovery.

    ``expected_recovered_snr_db`` is the noise-averaged value of the latter.
    For filter keys the inverse colors and amplifies the noise, so it sits
    below the input SNR by ``inverse_noise_gain(taps, d, average=True)``.
    """
    alloc = allocate_power(p, attack.kind)
    tx = transmit(s, attack, alloc, p, seed)
    reference = p.alpha * tx.signal
    diverged = False
    if attack.is_filter:
        recovered, diverged = bob_recover_filter(tx.received, attack.taps, p)
        snr_db = _snr_db(p.alpha * tx.sent, tx.noise)
        expected_db = expected_recovered_snr_db(reference, attack.taps, p)
    else:
        recovered = bob_recover_additive(tx.received, tx.perturbation, p)
        snr_db = _snr_db(reference, tx.noise)
        residual = (p.alpha - p.alpha_hat) ** 2 * alloc.perturbation_power
        expected_db = _power_ratio_db(p.alpha ** 2 * alloc.signal_power, p.noise_power + residual)
    return TrialResult(
        eve_correct=_classify(c_eve, tx.eve_window, k),
        bob_correct=_classify(c_bob, recovered, k),
        snr_db=snr_db,
        recovered_snr_db=_snr_db(reference, recovered - reference),
        expected_recovered_snr_db=expected_db,
        attack_id=attack_id,
        seed=int(seed),
        diverged=diverged,
    )
