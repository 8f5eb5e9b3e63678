"""Aggregation of input-specific attacks into one universal vector.

The aggregate points along the first principal direction of the stacked
attacks, each complex vector seen as its 2l real coordinates.
"""
import logging
from typing import Optional, Sequence, Tuple

import numpy as np
import torch as th

from advfilt.attacks.key import AttackKind, AttackSpec, Scope
from advfilt.common import dsp
from advfilt.common.ops import to_tensor
from advfilt.networks.classifier import Classifier

logger = logging.getLogger(__name__)

_SPREAD_TOLERANCE = 1e-12


def principal_direction(vectors: np.ndarray, center: bool = True) -> np.ndarray:
    """First right singular vector of the [n, l] complex stack, as complex l-vector.

    With ``center`` the stack is mean-removed first; when the attacks are
    all equal that leaves nothing to decompose and the normalized mean
    direction is returned instead. The sign follows the uncentered stack.
    """
    stacked = np.concatenate((vectors.real, vectors.imag), axis=1)
    if not np.any(stacked):
        raise ValueError("attack collection has rank 0")
    basis = stacked
    if center:
        basis = stacked - stacked.mean(axis=0, keepdims=True)
        if np.max(np.abs(basis)) <= _SPREAD_TOLERANCE * np.max(np.abs(stacked)):
            logger.debug("attacks have no spread around their mean, using the mean direction")
            basis = stacked.mean(axis=0, keepdims=True)
    _, _, vh = np.linalg.svd(basis, full_matrices=False)
    length = vectors.shape[1]
    direction = vh[0, :length] + 1j * vh[0, length:]
    if np.sum(stacked @ vh[0]) < 0.0:
        direction = -direction
    return direction


def probe_loss(
    spec: AttackSpec, classifier: Classifier, probe: Tuple[np.ndarray, np.ndarray]
) -> float:
    signals, labels = probe
    signals = to_tensor(np.atleast_2d(signals))
    if spec.is_filter:
        attacked = dsp.conv_same_th(signals, to_tensor(spec.taps))
    else:
        attacked = signals + to_tensor(spec.perturbation)
    with th.no_grad():
        return float(classifier.batch_loss(attacked, th.from_numpy(labels), "mean"))


def uap_aggregate(
    specs: Sequence[AttackSpec],
    power_budget: float = 1.0,
    classifier: Optional[Classifier] = None,
    probe: Optional[Tuple[np.ndarray, np.ndarray]] = None,
    center: bool = True,
    scope: Scope = Scope.UNIVERSAL,
    class_id: Optional[int] = None,
) -> AttackSpec:
    if len(specs) < 2:
        raise ValueError("aggregation needs at least two attacks, got {}".format(len(specs)))
    kinds = {spec.kind for spec in specs}
    lengths = {spec.values.size for spec in specs}
    if len(kinds) != 1 or len(lengths) != 1:
        raise ValueError("attacks to aggregate must share kind and length")
    kind = kinds.pop()

    direction = principal_direction(np.stack([spec.values for spec in specs]), center)

    def finalize(vector: np.ndarray) -> AttackSpec:
        if kind == AttackKind.FILTER:
            return AttackSpec.filter(dsp.power_normalize(vector), scope=scope, class_id=class_id)
        spec = AttackSpec.additive(vector, scope=scope, class_id=class_id)
        return spec.scaled(power_budget)

    candidates = [finalize(direction), finalize(-direction)]
    if classifier is None or probe is None:
        return candidates[0]
    if kind == AttackKind.ADDITIVE and power_budget == 0.0:
        return candidates[0]
    losses = [probe_loss(candidate, classifier, probe) for candidate in candidates]
    logger.debug("aggregate sign losses: %+.4f / %+.4f", *losses)
    return candidates[int(losses[1] > losses[0])]
