import datetime
import os

import numpy as np
import torch as th

import advfilt.common.types as t


def to_tensor(data: np.ndarray, device: th.device = th.device("cpu")) -> th.Tensor:
    data = np.asarray(data)
    if np.iscomplexobj(data):
        return th.from_numpy(data.astype(np.complex128, copy=True)).to(device)
    return th.from_numpy(data.astype(np.float64, copy=True)).to(device)


def to_numpy(data: th.Tensor) -> np.ndarray:
    return data.clone().cpu().detach().numpy()


def complex_to_real(data: th.Tensor) -> th.Tensor:
    """[..., d] complex -> [..., 2, d] real (I and Q channels)."""
    return th.stack((data.real, data.imag), dim=-2)


def pack_complex(grad: th.Tensor) -> np.ndarray:
    """Gradient of a view_as_real tensor -> d/dRe + j d/dIm."""
    grad = to_numpy(grad)
    return grad[..., 0] + 1j * grad[..., 1]


def set_seeds(seed: int = 1337):
    th.random.manual_seed(seed)
    np.random.seed(seed % 2 ** 32)


def make_rng(seed: t.TSeed) -> np.random.Generator:
    return np.random.default_rng(seed)


def derive_seed(*keys: int) -> np.random.SeedSequence:
    return np.random.SeedSequence([int(k) for k in keys])


def torch_generator(seed: int) -> th.Generator:
    generator = th.Generator()
    generator.manual_seed(int(seed))
    return generator


def db_to_linear(value_db: float) -> float:
    return float(10.0 ** (value_db / 10.0))


def linear_to_db(value: float) -> float:
    if value <= 0.0:
        return float("-inf")
    return float(10.0 * np.log10(value))


def create_log_dir(log_dir: str, experiment_name: str) -> str:
    os.makedirs(log_dir, exist_ok=True)
    now = datetime.datetime.now().strftime("%d_%m_%y_%H_%M_%S")
    log_name = "{}_{}".format(experiment_name, now)
    return os.path.join(log_dir, log_name)
