import numpy as np
import torch as th

import advfilt.common.types as t
from advfilt.common.dsp import as_signal

_TINY_POWER = 1e-300


class PowerNormalizer:
    """Removes the complex mean and scales to unit mean sample power.

    Works on the last axis, so a batch [B, d] is normalized row by row.
    """

    def __call__(self, batch_input: t.TData) -> t.TData:
        if isinstance(batch_input, th.Tensor):
            centered = batch_input - batch_input.mean(-1, keepdim=True)
            power = (centered.abs() ** 2).mean(-1, keepdim=True)
            return centered / th.sqrt(th.clamp_min(power, _TINY_POWER))
        centered = batch_input - np.mean(batch_input, axis=-1, keepdims=True)
        power = np.mean(np.abs(centered) ** 2, axis=-1, keepdims=True)
        if np.any(power == 0.0):
            raise ValueError("cannot normalize a constant signal")
        return centered / np.sqrt(power)


def normalize_input(s: t.TData) -> np.ndarray:
    return PowerNormalizer()(as_signal(s))
