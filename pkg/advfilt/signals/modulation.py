"""Synthetic modulated baseband signals.

Symbols are drawn from unit-energy constellations, upsampled and shaped with a
root-raised-cosine pulse.
"""
import enum
from typing import Dict

import numpy as np
import scipy.signal

import advfilt.common.types as t
from advfilt.common.ops import make_rng

SAMPLES_PER_SYMBOL = 8
ROLLOFF = 0.35
SPAN = 8
MIN_LENGTH = 32


class ModClass(enum.IntEnum):
    BPSK = 0
    QPSK = 1
    PSK8 = 2
    QAM16 = 3

    @classmethod
    def from_name(cls, name: str) -> "ModClass":
        try:
            return cls[name.upper()]
        except KeyError:
            raise ValueError("unknown modulation class '{}'".format(name))


def _psk(order: int) -> np.ndarray:
    return np.exp(2j * np.pi * np.arange(order) / order)


def _qam16() -> np.ndarray:
    levels = np.array([-3.0, -1.0, 1.0, 3.0])
    points = (levels[:, None] + 1j * levels[None, :]).ravel()
    return points / np.sqrt(np.mean(np.abs(points) ** 2))


constellations: Dict[ModClass, np.ndarray] = {
    ModClass.BPSK: np.array([-1.0 + 0.0j, 1.0 + 0.0j]),
    ModClass.QPSK: np.exp(1j * np.pi / 4) * _psk(4),
    ModClass.PSK8: _psk(8),
    ModClass.QAM16: _qam16(),
}


def rrc_taps(rolloff: float = ROLLOFF, sps: int = SAMPLES_PER_SYMBOL, span: int = SPAN) -> np.ndarray:
    """Unit-energy root-raised-cosine pulse spanning ``span`` symbols."""
    if not 0.0 < rolloff <= 1.0:
        raise ValueError("rolloff must lie in (0, 1], got {}".format(rolloff))
    time = np.arange(-span * sps // 2, span * sps // 2 + 1) / sps
    taps = np.empty(time.size)
    singular = 1.0 / (4.0 * rolloff)
    for i, tau in enumerate(time):
        if np.isclose(tau, 0.0):
            taps[i] = 1.0 + rolloff * (4.0 / np.pi - 1.0)
        elif np.isclose(abs(tau), singular):
            taps[i] = (rolloff / np.sqrt(2.0)) * (
                (1.0 + 2.0 / np.pi) * np.sin(np.pi / (4.0 * rolloff))
                + (1.0 - 2.0 / np.pi) * np.cos(np.pi / (4.0 * rolloff))
            )
        else:
            numerator = np.sin(np.pi * tau * (1.0 - rolloff)) + 4.0 * rolloff * tau * np.cos(
                np.pi * tau * (1.0 + rolloff)
            )
            denominator = np.pi * tau * (1.0 - (4.0 * rolloff * tau) ** 2)
            taps[i] = numerator / denominator
    return taps / np.linalg.norm(taps)


def generate_signal(
    k: ModClass,
    d: int,
    seed: t.TSeed,
    sps: int = SAMPLES_PER_SYMBOL,
    rolloff: float = ROLLOFF,
    span: int = SPAN,
) -> np.ndarray:
    if d < MIN_LENGTH:
        raise ValueError("signal length must be at least {}, got {}".format(MIN_LENGTH, d))
    rng = make_rng(seed)
    points = constellations[ModClass(k)]
    num_symbols = int(np.ceil(d / sps)) + span
    symbols = points[rng.integers(0, points.size, num_symbols)]
    symbols = symbols * np.exp(1j * rng.choice([0.0, np.pi / 4.0]))
    pulse = rrc_taps(rolloff, sps, span)
    shaped = scipy.signal.upfirdn(pulse, symbols, up=sps)
    # skip the filter transient so every kept sample sees a full pulse span
    start = pulse.size - 1
    window = shaped[start:start + d]
    if window.size < d:
        window = np.concatenate((window, np.zeros(d - window.size, np.complex128)))
    return window.astype(np.complex128)
