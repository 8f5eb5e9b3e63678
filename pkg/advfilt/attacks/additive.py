import logging

import numpy as np

import advfilt.common.types as t
from advfilt.attacks.attack import Attack
from advfilt.attacks.key import AttackKind, AttackSpec, Scope
from advfilt.common.dsp import as_signal
from advfilt.networks.classifier import Classifier

logger = logging.getLogger(__name__)


def _rescaled(direction: np.ndarray, power_budget: float) -> AttackSpec:
    if power_budget < 0.0:
        raise ValueError("power budget must be non-negative, got {}".format(power_budget))
    if not np.any(direction):
        logger.warning("loss gradient vanished, returning a zero perturbation")
        return AttackSpec.additive(
            np.zeros_like(direction), scope=Scope.PER_INPUT, zero_gradient=True
        )
    return AttackSpec.additive(direction, scope=Scope.PER_INPUT).scaled(power_budget)


def fgm(classifier: Classifier, s: t.TData, k: int, power_budget: float) -> AttackSpec:
    """Perturbation along the loss gradient with per-sample power ``power_budget``."""
    return _rescaled(classifier.grad_input(as_signal(s), k), power_budget)


def fgsm(classifier: Classifier, s: t.TData, k: int, power_budget: float) -> AttackSpec:
    grad = classifier.grad_input(as_signal(s), k)
    return _rescaled(np.sign(grad.real) + 1j * np.sign(grad.imag), power_budget)


class FastGradientMethod(Attack, attack_type="fgm"):
    kind = AttackKind.ADDITIVE

    def craft_input(self, classifier: Classifier, s: np.ndarray, k: int) -> AttackSpec:
        return fgm(classifier, s, k, self.power_budget)

    def aggregation_input(self, classifier: Classifier, s: np.ndarray, k: int) -> AttackSpec:
        # directions at unit power, the budget is applied to the aggregate
        return fgm(classifier, s, k, 1.0)


class FastGradientSignMethod(Attack, attack_type="fgsm"):
    kind = AttackKind.ADDITIVE

    def craft_input(self, classifier: Classifier, s: np.ndarray, k: int) -> AttackSpec:
        return fgsm(classifier, s, k, self.power_budget)

    def aggregation_input(self, classifier: Classifier, s: np.ndarray, k: int) -> AttackSpec:
        return fgsm(classifier, s, k, 1.0)
