"""Gradient ascent filter: taps trained to maximize Eve's loss."""
import logging
from typing import Dict, List, Optional

import numpy as np
import torch as th
import torch.optim as optim
import tqdm
from torch.utils.tensorboard import SummaryWriter

import advfilt.common.ops as ops
from advfilt.attacks.attack import Attack
from advfilt.attacks.creation import CreationFn
from advfilt.attacks.key import AttackKind, AttackSpec, Scope
from advfilt.common.dsp import conv_same_th
from advfilt.common.errors import DivergenceError
from advfilt.networks.classifier import Classifier

logger = logging.getLogger(__name__)

optimizers: Dict[str, type] = {
    "sgd": optim.SGD,
    "adam": optim.Adam,
    "adagrad": optim.Adagrad,
    "rmsprop": optim.RMSprop,
}


def initial_delta(length: int, seed: int) -> th.Tensor:
    """Delta_0 with i.i.d. standard normal real and imaginary parts, as [l, 2] reals."""
    return th.randn(length, 2, generator=ops.torch_generator(seed), dtype=th.float64)


def gaf_train(
    classifier: Classifier,
    signals: np.ndarray,
    labels: np.ndarray,
    m: int,
    creation: CreationFn,
    epochs: int = 200,
    learn_rate: float = 0.05,
    seed: int = 0,
    optimizer: str = "sgd",
    scope: Scope = Scope.UNIVERSAL,
    class_id: Optional[int] = None,
    history: Optional[List[float]] = None,
    writer: Optional[SummaryWriter] = None,
) -> AttackSpec:
    """Full-batch ascent of the summed loss sum_i L(h(s_i conv delta), k_i).

    With ``optimizer="sgd"`` every step is Delta <- Delta + eta * grad.
    """
    signals = np.atleast_2d(np.asarray(signals, dtype=np.complex128))
    labels = np.atleast_1d(np.asarray(labels, dtype=np.int64))
    if signals.shape[0] == 0:
        raise ValueError("GAF needs at least one training signal")
    if epochs < 0:
        raise ValueError("epoch count must be non-negative, got {}".format(epochs))
    if optimizer not in optimizers:
        raise ValueError("unknown optimizer '{}'".format(optimizer))

    delta = initial_delta(creation.temp_length(m), seed).requires_grad_(True)
    optim_ = optimizers[optimizer]([delta], lr=learn_rate, maximize=True)
    x = ops.to_tensor(signals)
    y = th.from_numpy(labels)

    for epoch in tqdm.tqdm(range(epochs), desc="gaf", leave=False, disable=epochs == 0):
        taps = creation(th.view_as_complex(delta))
        loss = classifier.batch_loss(conv_same_th(x, taps), y, "sum")
        if not th.isfinite(loss):
            raise DivergenceError("GAF loss became {} at epoch {}".format(float(loss), epoch))
        (grad,) = th.autograd.grad(loss, delta)
        optim_.zero_grad()
        delta.grad = grad
        optim_.step()
        if history is not None:
            history.append(float(loss))
        if writer is not None:
            writer.add_scalar("gaf/loss", float(loss), epoch)

    with th.no_grad():
        taps = ops.to_numpy(creation(th.view_as_complex(delta.detach())))
    return AttackSpec.filter(taps, scope=scope, class_id=class_id)


class GradientAscentFilter(Attack, attack_type="gaf"):
    kind = AttackKind.FILTER

    def __init__(
        self,
        taps: int = 5,
        creation_type: str = "root_training",
        beta: Optional[float] = None,
        epochs: int = 200,
        learn_rate: float = 0.05,
        optimizer: str = "sgd",
        seed: int = 0,
        log_path: Optional[str] = None,
        **kwargs
    ):
        super().__init__(**kwargs)
        creation_kwargs = {} if beta is None else {"beta": beta}
        self.creation = CreationFn.build(creation_type, **creation_kwargs)
        self.taps = taps
        self.epochs = epochs
        self.learn_rate = learn_rate
        self.optimizer = optimizer
        self.seed = seed
        self.log_path = log_path
        self.history: List[float] = []

    def craft_input(self, classifier: Classifier, s: np.ndarray, k: int) -> AttackSpec:
        return self._train(classifier, s[None, :], np.array([k]), Scope.PER_INPUT, None)

    def craft(self, classifier, signals, labels, scope=Scope.UNIVERSAL, class_id=None) -> AttackSpec:
        return self._train(classifier, signals, labels, scope, class_id)

    def _train(self, classifier, signals, labels, scope, class_id) -> AttackSpec:
        self.history = []
        writer = None
        if self.log_path is not None:
            name = "gaf_{}_{}".format(self.creation.creation_type, scope.name.lower())
            writer = SummaryWriter(ops.create_log_dir(self.log_path, name))
        spec = gaf_train(
            classifier,
            signals,
            labels,
            self.taps,
            self.creation,
            epochs=self.epochs,
            learn_rate=self.learn_rate,
            seed=self.seed,
            optimizer=self.optimizer,
            scope=scope,
            class_id=class_id,
            history=self.history,
            writer=writer,
        )
        if writer is not None:
            writer.close()
        logger.info(
            "%s GAF on %d signals: loss %.3f -> %.3f, minimum phase %s",
            self.creation.creation_type,
            len(labels),
            self.history[0] if self.history else float("nan"),
            self.history[-1] if self.history else float("nan"),
            spec.is_minimum_phase,
        )
        return spec
