"""Fast gradient filter method: closed-form first-order filter for one input."""
from typing import Tuple

import numpy as np

import advfilt.common.types as t
from advfilt.attacks.attack import Attack
from advfilt.attacks.key import AttackKind, AttackSpec, Scope
from advfilt.common import dsp
from advfilt.networks.classifier import Classifier


def fgfm_jacobian_t(s: t.TData, m: int) -> np.ndarray:
    """[m, d] transpose of d(s conv_same delta)/d(delta); row i is s shifted by i - (m-1)//2."""
    return dsp.toeplitz_same(s, m).T


def fgfm_components(
    classifier: Classifier, s: t.TData, k: int, m: int, epsilon: float = 1.0, conjugate: bool = True
) -> Tuple[np.ndarray, np.ndarray]:
    """Returns ``(v + epsilon * delta, delta)`` before power normalization."""
    if m % 2 == 0:
        raise ValueError("FGFM needs an odd number of taps, got {}".format(m))
    s = dsp.as_signal(s)
    jacobian_t = fgfm_jacobian_t(s, m)
    if conjugate:
        jacobian_t = np.conj(jacobian_t)
    delta = jacobian_t @ classifier.grad_input(s, k)
    return dsp.centered_unit_tap(m) + epsilon * delta, delta


def fgfm(
    classifier: Classifier, s: t.TData, k: int, m: int, epsilon: float = 1.0, conjugate: bool = True
) -> AttackSpec:
    taps, _ = fgfm_components(classifier, s, k, m, epsilon, conjugate)
    return AttackSpec.filter(dsp.power_normalize(taps), scope=Scope.PER_INPUT)


class FastGradientFilterMethod(Attack, attack_type="fgfm"):
    kind = AttackKind.FILTER

    def __init__(self, taps: int = 5, epsilon: float = 1.0, conjugate: bool = True, **kwargs):
        super().__init__(**kwargs)
        if taps % 2 == 0:
            raise ValueError("FGFM needs an odd number of taps, got {}".format(taps))
        self.taps = taps
        self.epsilon = epsilon
        self.conjugate = conjugate

    def craft_input(self, classifier: Classifier, s: np.ndarray, k: int) -> AttackSpec:
        return fgfm(classifier, s, k, self.taps, self.epsilon, self.conjugate)
