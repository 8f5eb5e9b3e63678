"""Filter creation functions: trainable vector Delta -> power-preserving taps.

Each function is differentiable in torch so the GAF ascent can run the chain
rule through it.
"""
import abc
from typing import Dict

import numpy as np
import torch as th

import advfilt.common.types as t
from advfilt.common import dsp
from advfilt.common.ops import to_numpy, to_tensor


class CreationFn(abc.ABC):
    registered_creations: Dict[str, "CreationFn"] = {}

    def __init_subclass__(cls, creation_type: str = None, **kwargs):
        super().__init_subclass__(**kwargs)
        if creation_type is not None:
            cls.registered_creations[creation_type] = cls
            cls.creation_type = creation_type

    @classmethod
    def build(cls, creation_type: str, **kwargs) -> "CreationFn":
        if creation_type not in cls.registered_creations:
            raise ValueError("unknown creation function '{}'".format(creation_type))
        return cls.registered_creations[creation_type](**kwargs)

    @abc.abstractmethod
    def temp_length(self, m: int) -> int:
        pass

    @abc.abstractmethod
    def __call__(self, delta: th.Tensor) -> th.Tensor:
        pass

    def create(self, delta: t.TData) -> np.ndarray:
        return to_numpy(self(to_tensor(dsp.as_signal(delta, "delta"))))

    @staticmethod
    def _check_nonzero(delta: th.Tensor):
        if not th.any(delta != 0):
            raise ValueError("temporary vector is all zero")


class Unconstrained(CreationFn, creation_type="unconstrained"):
    def temp_length(self, m: int) -> int:
        return m

    def __call__(self, delta: th.Tensor) -> th.Tensor:
        self._check_nonzero(delta)
        return dsp.power_normalize_th(delta)


class FirstTapConstrained(CreationFn, creation_type="first_tap_constrained"):
    """Real first tap beta + 1 dominating the L1-normalized remaining taps."""

    def __init__(self, beta: float = 0.9):
        if beta <= 0.0:
            raise ValueError("first-tap beta must be positive, got {}".format(beta))
        self.beta = beta

    def temp_length(self, m: int) -> int:
        return m - 1

    def __call__(self, delta: th.Tensor) -> th.Tensor:
        self._check_nonzero(delta)
        first = th.full((1,), self.beta + 1.0, dtype=delta.dtype, device=delta.device)
        taps = th.cat((first, delta / th.sum(delta.abs())))
        return dsp.power_normalize_th(taps)


class RootTraining(CreationFn, creation_type="root_training"):
    """Delta holds negated inverse zeros a_i, scaled so min |a_i| = beta > 1."""

    def __init__(self, beta: float = 1.25):
        if beta <= 1.0:
            raise ValueError("root-training beta must exceed 1, got {}".format(beta))
        self.beta = beta

    def temp_length(self, m: int) -> int:
        return m - 1

    def roots(self, delta: th.Tensor) -> th.Tensor:
        if th.any(delta == 0):
            raise ValueError("root-training vector has a zero entry")
        # the minimum magnitude is held constant within a step
        smallest = delta.abs().detach().min()
        return delta * self.beta / smallest

    def __call__(self, delta: th.Tensor) -> th.Tensor:
        return dsp.power_normalize_th(dsp.roots_to_coeffs_th(self.roots(delta)))


def creation_u(delta: t.TData) -> np.ndarray:
    return Unconstrained().create(delta)


def creation_ftc(delta: t.TData, beta: float = 0.9) -> np.ndarray:
    return FirstTapConstrained(beta).create(delta)


def creation_rt(delta: t.TData, beta: float = 1.25) -> np.ndarray:
    return RootTraining(beta).create(delta)
