import logging
import struct
from dataclasses import dataclass, field
from typing import Sequence, Tuple

import numpy as np

from advfilt.common.errors import FormatError
from advfilt.common.normalizer import PowerNormalizer
from advfilt.common.ops import derive_seed
from advfilt.signals.modulation import ModClass, generate_signal

logger = logging.getLogger(__name__)

MAGIC = b"AFDS"
VERSION = 1
_HEADER = struct.Struct("<4sIIIQ")
_LABEL = struct.Struct("<I")
TRAIN_FRACTION = 0.8
# smallest class size whose 80/20 split leaves a test example
MIN_PER_CLASS = 3


@dataclass
class Dataset:
    signals: np.ndarray
    labels: np.ndarray
    classes: Tuple[ModClass, ...]
    seed: int = 0
    train_idx: np.ndarray = field(init=False)
    test_idx: np.ndarray = field(init=False)

    def __post_init__(self):
        self.signals = np.asarray(self.signals, dtype=np.complex128)
        self.labels = np.asarray(self.labels, dtype=np.int64)
        self.classes = tuple(ModClass(k) for k in self.classes)
        if self.signals.shape[0] != self.labels.shape[0]:
            raise ValueError("signal and label counts differ")
        self.train_idx, self.test_idx = split_indices(self.labels)

    @property
    def num_classes(self) -> int:
        return len(self.classes)

    @property
    def length(self) -> int:
        return self.signals.shape[1]

    def __len__(self) -> int:
        return self.labels.shape[0]

    def train(self) -> Tuple[np.ndarray, np.ndarray]:
        return self.signals[self.train_idx], self.labels[self.train_idx]

    def test(self) -> Tuple[np.ndarray, np.ndarray]:
        return self.signals[self.test_idx], self.labels[self.test_idx]

    def class_counts(self, idx: np.ndarray = None) -> np.ndarray:
        labels = self.labels if idx is None else self.labels[idx]
        return np.bincount(labels, minlength=self.num_classes)


def split_indices(labels: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """First 80 % of every class, in stored order, is the training split."""
    train, test = [], []
    for k in np.unique(labels):
        members = np.flatnonzero(labels == k)
        cut = int(round(TRAIN_FRACTION * members.size))
        train.append(members[:cut])
        test.append(members[cut:])
    if not train:
        return np.zeros(0, np.int64), np.zeros(0, np.int64)
    return np.sort(np.concatenate(train)), np.sort(np.concatenate(test))


def make_dataset(classes: Sequence[ModClass], per_class: int, d: int, seed: int) -> Dataset:
    if per_class < MIN_PER_CLASS:
        raise ValueError(
            "need at least {} examples per class for a train/test split, got {}".format(
                MIN_PER_CLASS, per_class
            )
        )
    classes = tuple(ModClass(k) for k in classes)
    normalizer = PowerNormalizer()
    signals = np.empty((len(classes) * per_class, d), dtype=np.complex128)
    labels = np.empty(len(classes) * per_class, dtype=np.int64)
    for index in range(signals.shape[0]):
        label = index % len(classes)
        signal = generate_signal(classes[label], d, derive_seed(seed, index))
        signals[index] = normalizer(signal)
        labels[index] = label
    logger.info("generated %d signals of length %d for %d classes", len(labels), d, len(classes))
    return Dataset(signals=signals, labels=labels, classes=classes, seed=seed)


def save_dataset(dataset: Dataset, path: str):
    with open(path, "wb") as dataset_file:
        dataset_file.write(
            _HEADER.pack(MAGIC, VERSION, dataset.num_classes, dataset.length, len(dataset))
        )
        interleaved = np.empty((dataset.length, 2), dtype="<f8")
        for signal, label in zip(dataset.signals, dataset.labels):
            dataset_file.write(_LABEL.pack(int(dataset.classes[label])))
            interleaved[:, 0] = signal.real
            interleaved[:, 1] = signal.imag
            dataset_file.write(interleaved.tobytes())


def load_dataset(path: str, seed: int = 0) -> Dataset:
    with open(path, "rb") as dataset_file:
        payload = dataset_file.read()
    if len(payload) < _HEADER.size:
        raise FormatError("{}: file too short for an AFDS header".format(path))
    magic, version, num_classes, d, count = _HEADER.unpack_from(payload)
    if magic != MAGIC:
        raise FormatError("{}: bad magic {!r}, expected {!r}".format(path, magic, MAGIC))
    if version != VERSION:
        raise FormatError("{}: unsupported version {}, expected {}".format(path, version, VERSION))
    record = _LABEL.size + 16 * d
    if len(payload) != _HEADER.size + count * record:
        raise FormatError("{}: payload holds {} bytes, header announces {} examples".format(
            path, len(payload) - _HEADER.size, count))
    class_ids = np.empty(count, dtype=np.int64)
    signals = np.empty((count, d), dtype=np.complex128)
    offset = _HEADER.size
    for i in range(count):
        (class_ids[i],) = _LABEL.unpack_from(payload, offset)
        pairs = np.frombuffer(payload, dtype="<f8", count=2 * d, offset=offset + _LABEL.size)
        signals[i] = pairs[0::2] + 1j * pairs[1::2]
        offset += record
    try:
        classes = tuple(ModClass(k) for k in sorted(set(class_ids.tolist())))
    except ValueError as err:
        raise FormatError("{}: unknown modulation class id ({})".format(path, err))
    if len(classes) != num_classes:
        raise FormatError("{}: header announces {} classes, found {}".format(
            path, num_classes, len(classes)))
    position = {int(k): i for i, k in enumerate(classes)}
    labels = np.array([position[int(k)] for k in class_ids], dtype=np.int64)
    return Dataset(signals=signals, labels=labels, classes=classes, seed=seed)
