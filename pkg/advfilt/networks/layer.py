import abc
from typing import Dict, Tuple

import torch
import torch.nn as nn

activation_fn: Dict[str, nn.Module] = {
    "relu": nn.ReLU(),
    "elu": nn.ELU(),
    "tanh": nn.Tanh(),
    "identity": nn.Identity(),
    "none": None,
}
activation_codes: Dict[str, int] = {name: code for code, name in enumerate(activation_fn)}


class Layer(nn.Module, abc.ABC):
    registered_layer: Dict[str, "Layer"] = {}
    layer_codes: Dict[str, int] = {}

    def __init_subclass__(cls, layer_type: str, layer_code: int, **kwargs):
        super().__init_subclass__(**kwargs)
        cls.registered_layer[layer_type] = cls
        cls.layer_codes[layer_type] = layer_code

    @classmethod
    def build(cls, in_dim: int, **kwargs) -> "Layer":
        layer_type = kwargs["layer_type"]
        if layer_type not in cls.registered_layer:
            raise ValueError("unknown layer type '{}'".format(layer_type))
        return cls.registered_layer[layer_type](in_dim=in_dim, **kwargs)

    @classmethod
    def type_from_code(cls, code: int) -> str:
        for layer_type, layer_code in cls.layer_codes.items():
            if layer_code == code:
                return layer_type
        raise ValueError("unknown layer code {}".format(code))

    def __init__(
        self,
        in_dim: int,
        out_dim: int,
        layer_type: str,
        activation: str = "none",
        kernel_size: int = 0,
    ):
        super().__init__()
        self.in_dim = in_dim
        self.out_dim = out_dim
        self.layer_type = layer_type
        self.activation = activation
        self.kernel_size = kernel_size

        block = [self._get_layer(), activation_fn[activation]]
        self._module = nn.Sequential(*[module for module in block if module])

    def forward(self, input_data: torch.Tensor) -> torch.Tensor:
        return self._module(input_data)

    def descriptor(self) -> Tuple[int, int, int, int, int]:
        return (
            self.layer_codes[self.layer_type],
            self.in_dim,
            self.out_dim,
            self.kernel_size,
            activation_codes[self.activation],
        )

    def config(self) -> dict:
        params = {"layer_type": self.layer_type, "out_dim": self.out_dim}
        if self.activation != "none":
            params["activation"] = self.activation
        if self.kernel_size:
            params["kernel_size"] = self.kernel_size
        return params

    @abc.abstractmethod
    def _get_layer(self) -> nn.Module:
        pass


class Linear(Layer, layer_type="linear", layer_code=0):
    def _get_layer(self) -> nn.Module:
        return nn.Linear(self.in_dim, self.out_dim)


class Conv1d(Layer, layer_type="conv1d", layer_code=1):
    def __init__(self, kernel_size: int, **kwargs):
        if kernel_size % 2 == 0:
            raise ValueError("conv1d kernels must have odd width, got {}".format(kernel_size))
        super().__init__(kernel_size=kernel_size, **kwargs)

    def _get_layer(self) -> nn.Module:
        return nn.Conv1d(
            in_channels=self.in_dim,
            out_channels=self.out_dim,
            kernel_size=self.kernel_size,
            padding=self.kernel_size // 2,
        )


class Flatten(Layer, layer_type="flatten", layer_code=2):
    def _get_layer(self) -> nn.Module:
        return nn.Flatten()
