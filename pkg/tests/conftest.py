import numpy as np
import pytest

from advfilt.networks.classifier import Classifier, train
from advfilt.signals.dataset import make_dataset
from advfilt.signals.modulation import ModClass

SMALL_LENGTH = 64

# smooth activations keep finite differences well defined
smooth_layers = [
    {"layer_type": "conv1d", "out_dim": 4, "kernel_size": 5, "activation": "tanh"},
    {"layer_type": "flatten"},
    {"layer_type": "linear", "out_dim": 16, "activation": "tanh"},
]


@pytest.fixture(scope="session")
def layer_config():
    return [dict(layer) for layer in smooth_layers]


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture(scope="session")
def small_dataset():
    return make_dataset(list(ModClass), per_class=20, d=SMALL_LENGTH, seed=0)


@pytest.fixture(scope="session")
def small_classifier():
    return Classifier(SMALL_LENGTH, len(ModClass), layers=smooth_layers, seed=3)


@pytest.fixture(scope="session")
def quick_classifier(small_dataset):
    return train(small_dataset, epochs=3, learn_rate=1e-3, seed=0, layers=smooth_layers)


@pytest.fixture(scope="session")
def default_dataset():
    return make_dataset(list(ModClass), per_class=500, d=128, seed=0)


@pytest.fixture(scope="session")
def trained_classifier(default_dataset):
    return train(default_dataset, epochs=30, learn_rate=1e-3, seed=0)


@pytest.fixture
def random_signal(rng):
    def make(d: int) -> np.ndarray:
        return rng.standard_normal(d) + 1j * rng.standard_normal(d)

    return make
