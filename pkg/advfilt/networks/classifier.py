import logging
import struct
from typing import Any, Dict, Sequence

import numpy as np
import torch as th
import torch.nn.functional as F
import torch.optim as optim
import tqdm
from torch.utils.tensorboard import SummaryWriter

import advfilt.common.ops as ops
import advfilt.common.types as t
from advfilt.common.dsp import as_signal, conv_same, toeplitz_same
from advfilt.common.errors import DivergenceError, FormatError
from advfilt.common.normalizer import PowerNormalizer
from advfilt.networks.body import Body
from advfilt.signals.dataset import Dataset

logger = logging.getLogger(__name__)

MAGIC = b"AFNN"
VERSION = 1
_HEADER = struct.Struct("<4sIIIQI")
_LAYER = struct.Struct("<5I")


class Classifier:
    """Fixed-architecture modulation classifier (Bob's h_B or Eve's h_E).

    Input normalization is part of the forward graph, so every gradient
    includes its Jacobian.
    """

    def __init__(
        self,
        input_length: int,
        num_classes: int,
        layers: Sequence[Dict[str, Any]] = None,
        seed: int = 0,
        network: Body = None,
    ):
        self.input_length = input_length
        self.num_classes = num_classes
        self.seed = seed
        if network is None:
            ops.set_seeds(seed)
            network = Body(input_length, num_classes, layers)
        self._network = network.double()
        self._network.eval()
        self._normalizer = PowerNormalizer()

    @property
    def network(self) -> Body:
        return self._network

    @property
    def layers(self):
        return self._network.layers

    def logits(self, signals: th.Tensor) -> th.Tensor:
        """[B, d] complex -> [B, K] logits."""
        if signals.shape[-1] != self.input_length:
            raise ValueError(
                "classifier expects {} samples, got {}".format(self.input_length, signals.shape[-1])
            )
        return self._network(ops.complex_to_real(self._normalizer(signals)))

    def batch_loss(self, signals: th.Tensor, labels: th.Tensor, reduction: str = "sum") -> th.Tensor:
        return F.cross_entropy(self.logits(signals), labels, reduction=reduction)

    def predict_batch(self, signals: np.ndarray) -> np.ndarray:
        signals = np.atleast_2d(np.asarray(signals, dtype=np.complex128))
        with th.no_grad():
            return ops.to_numpy(th.softmax(self.logits(ops.to_tensor(signals)), dim=-1))

    def predict(self, s: t.TData) -> np.ndarray:
        return self.predict_batch(as_signal(s)[None, :])[0]

    def loss(self, s: t.TData, k: int) -> float:
        signal = ops.to_tensor(as_signal(s)[None, :])
        with th.no_grad():
            return float(self.batch_loss(signal, self._labels(k)))

    def grad_input(self, s: t.TData, k: int) -> np.ndarray:
        """dL/dRe(s_n) + j dL/dIm(s_n) for every sample."""
        real_view = th.view_as_real(ops.to_tensor(as_signal(s)[None, :])).clone()
        real_view.requires_grad_(True)
        loss = self.batch_loss(th.view_as_complex(real_view), self._labels(k))
        loss.backward()
        return ops.pack_complex(real_view.grad[0])

    def grad_taps(self, s: t.TData, k: int, f: t.TData, conjugate: bool = True) -> np.ndarray:
        """Loss gradient w.r.t. the taps of the filter applied before the classifier.

        G_j = sum_n conj(J[n, j]) g_n with J = toeplitz_same(s, m) and g the
        input gradient at conv_same(s, f). ``conjugate=False`` drops the
        conjugation.
        """
        s = as_signal(s)
        f = as_signal(f, "taps")
        g = self.grad_input(conv_same(s, f), k)
        jacobian = toeplitz_same(s, f.size)
        if conjugate:
            jacobian = np.conj(jacobian)
        return jacobian.T @ g

    def accuracy(self, signals: np.ndarray, labels: np.ndarray) -> float:
        predictions = np.argmax(self.predict_batch(signals), axis=-1)
        return macro_accuracy(predictions, labels, self.num_classes)

    def state_arrays(self) -> Dict[str, np.ndarray]:
        return {k: ops.to_numpy(v) for k, v in self._network.state_dict().items()}

    def save(self, path: str):
        descriptor = self._network.descriptor()
        with open(path, "wb") as weight_file:
            weight_file.write(
                _HEADER.pack(
                    MAGIC, VERSION, self.num_classes, self.input_length, self.seed, len(descriptor)
                )
            )
            for layer in descriptor:
                weight_file.write(_LAYER.pack(*layer))
            for array in self.state_arrays().values():
                weight_file.write(np.ascontiguousarray(array, dtype="<f8").tobytes())

    @classmethod
    def load(cls, path: str) -> "Classifier":
        with open(path, "rb") as weight_file:
            payload = weight_file.read()
        if len(payload) < _HEADER.size:
            raise FormatError("{}: file too short for an AFNN header".format(path))
        magic, version, num_classes, length, seed, count = _HEADER.unpack_from(payload)
        if magic != MAGIC:
            raise FormatError("{}: bad magic {!r}, expected {!r}".format(path, magic, MAGIC))
        if version != VERSION:
            raise FormatError("{}: unsupported version {}, expected {}".format(path, version, VERSION))
        offset = _HEADER.size
        descriptor = []
        for _ in range(count):
            descriptor.append(_LAYER.unpack_from(payload, offset))
            offset += _LAYER.size
        try:
            network = Body.from_descriptor(length, num_classes, descriptor)
        except (ValueError, KeyError, TypeError) as err:
            raise FormatError("{}: bad architecture descriptor ({})".format(path, err))
        state = network.state_dict()
        for name, tensor in state.items():
            size = tensor.numel()
            if offset + 8 * size > len(payload):
                raise FormatError("{}: truncated weights at '{}'".format(path, name))
            array = np.frombuffer(payload, dtype="<f8", count=size, offset=offset)
            state[name] = th.from_numpy(array.reshape(tuple(tensor.shape)).copy())
            offset += 8 * size
        if offset != len(payload):
            raise FormatError("{}: {} trailing bytes after weights".format(path, len(payload) - offset))
        network.double().load_state_dict(state)
        return cls(length, num_classes, seed=seed, network=network)

    @staticmethod
    def _labels(k: int) -> th.Tensor:
        return th.tensor([int(k)], dtype=th.long)


def macro_accuracy(predictions: np.ndarray, labels: np.ndarray, num_classes: int) -> float:
    """Mean over classes of the per-class correct-classification rate."""
    predictions = np.asarray(predictions)
    labels = np.asarray(labels)
    if labels.size == 0:
        raise ValueError("accuracy of an empty example set is undefined")
    rates = []
    for k in range(num_classes):
        members = labels == k
        if not np.any(members):
            raise ValueError("class {} has no examples".format(k))
        rates.append(np.mean(predictions[members] == k))
    return float(np.mean(rates))


def train(
    data: Dataset,
    epochs: int = 30,
    learn_rate: float = 1e-3,
    seed: int = 0,
    batch_size: int = 64,
    augment_snr_db: float = 10.0,
    layers: Sequence[Dict[str, Any]] = None,
    log_path: str = None,
    experiment_name: str = "classifier",
) -> Classifier:
    """Mini-batch Adam on cross-entropy with AWGN augmentation."""
    counts = data.class_counts(data.train_idx)
    if np.any(counts != counts[0]):
        raise ValueError("training split is not balanced: {}".format(counts.tolist()))
    classifier = Classifier(data.length, data.num_classes, layers, seed)
    network = classifier.network
    optimizer = optim.Adam(network.parameters(), lr=learn_rate, betas=(0.9, 0.999), eps=1e-8)
    generator = ops.torch_generator(seed)
    writer = None
    if log_path is not None:
        writer = SummaryWriter(ops.create_log_dir(log_path, experiment_name))

    signals, labels = data.train()
    signals = ops.to_tensor(signals)
    labels = th.from_numpy(labels)
    noise_std = np.sqrt(ops.db_to_linear(-augment_snr_db) / 2.0)

    network.train()
    step = 0
    pb = tqdm.tqdm(range(epochs), desc="train", disable=epochs == 0)
    for epoch in pb:
        order = th.randperm(labels.shape[0], generator=generator)
        epoch_loss = 0.0
        for start in range(0, order.shape[0], batch_size):
            idx = order[start:start + batch_size]
            noise = th.complex(
                th.randn(idx.shape[0], data.length, generator=generator, dtype=th.float64),
                th.randn(idx.shape[0], data.length, generator=generator, dtype=th.float64),
            )
            loss = classifier.batch_loss(signals[idx] + noise_std * noise, labels[idx], "mean")
            if not th.isfinite(loss):
                raise DivergenceError(
                    "classifier loss became {} at epoch {}, step {}".format(float(loss), epoch, step)
                )
            optimizer.zero_grad()
            loss.backward()
            optimizer.step()
            epoch_loss += float(loss) * idx.shape[0]
            step += 1
        epoch_loss /= labels.shape[0]
        pb.set_postfix(loss=epoch_loss)
        if writer is not None:
            writer.add_scalar("train/loss", epoch_loss, epoch)
    network.eval()
    if writer is not None:
        writer.close()
    logger.info("trained classifier for %d epochs (%d steps)", epochs, step)
    return classifier
