import abc
import logging
from typing import Dict, Optional

import numpy as np

from advfilt.attacks.key import AttackKind, AttackSpec, Scope
from advfilt.attacks.uap import uap_aggregate
from advfilt.networks.classifier import Classifier

logger = logging.getLogger(__name__)


class Attack(abc.ABC):
    registered_attacks: Dict[str, "Attack"] = {}
    kind: AttackKind = AttackKind.FILTER

    def __init_subclass__(cls, attack_type: str = None, **kwargs):
        super().__init_subclass__(**kwargs)
        if attack_type is not None:
            cls.registered_attacks[attack_type] = cls
            cls.attack_type = attack_type

    @classmethod
    def build(cls, attack_type: str, **kwargs) -> "Attack":
        if attack_type not in cls.registered_attacks:
            raise ValueError("unknown attack type '{}'".format(attack_type))
        return cls.registered_attacks[attack_type](**kwargs)

    def __init__(self, power_budget: float = 1.0, center: bool = True):
        self.power_budget = power_budget
        self.center = center

    @abc.abstractmethod
    def craft_input(self, classifier: Classifier, s: np.ndarray, k: int) -> AttackSpec:
        """Input-specific attack."""

    def aggregation_input(self, classifier: Classifier, s: np.ndarray, k: int) -> AttackSpec:
        return self.craft_input(classifier, s, k)

    def craft(
        self,
        classifier: Classifier,
        signals: np.ndarray,
        labels: np.ndarray,
        scope: Scope = Scope.UNIVERSAL,
        class_id: Optional[int] = None,
    ) -> AttackSpec:
        """One attack for the whole collection, aggregated from per-input ones."""
        specs = [self.aggregation_input(classifier, s, k) for s, k in zip(signals, labels)]
        logger.info("aggregating %d %s attacks", len(specs), self.attack_type)
        return uap_aggregate(
            specs,
            power_budget=self.power_budget,
            classifier=classifier,
            probe=(signals, labels),
            center=self.center,
            scope=scope,
            class_id=class_id,
        )


class NoAttack(Attack, attack_type="none"):
    """Identity filter, the clean baseline."""

    def craft_input(self, classifier: Classifier, s: np.ndarray, k: int) -> AttackSpec:
        return AttackSpec.filter(np.ones(1), scope=Scope.PER_INPUT)

    def craft(self, classifier, signals, labels, scope=Scope.UNIVERSAL, class_id=None) -> AttackSpec:
        return AttackSpec.filter(np.ones(1), scope=scope, class_id=class_id)
