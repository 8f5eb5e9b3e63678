from typing import Any, Dict, List, Sequence, Tuple

import torch as th
import torch.nn as nn

from advfilt.networks.layer import Layer, activation_fn

IQ_CHANNELS = 2

default_layers: List[Dict[str, Any]] = [
    {"layer_type": "conv1d", "out_dim": 16, "kernel_size": 7, "activation": "relu"},
    {"layer_type": "conv1d", "out_dim": 16, "kernel_size": 5, "activation": "relu"},
    {"layer_type": "flatten"},
    {"layer_type": "linear", "out_dim": 64, "activation": "relu"},
]


class Body(nn.Module):
    """Convolutional feature stack followed by the K-way output layer.

    Takes a real [B, 2, d] I/Q tensor and returns [B, K] logits.
    """

    def __init__(self, input_length: int, num_classes: int, layers: Sequence[Dict[str, Any]] = None):
        super().__init__()
        self.input_length = input_length
        self.num_classes = num_classes
        self._layer_params = [dict(params) for params in (layers or default_layers)]
        self._body = self._build_network()

    def forward(self, x: th.Tensor) -> th.Tensor:
        for layer in self._body:
            x = layer(x)
        return x

    @property
    def layers(self) -> List[Dict[str, Any]]:
        return [layer.config() for layer in self._body][:-1]

    def descriptor(self) -> List[Tuple[int, int, int, int, int]]:
        return [layer.descriptor() for layer in self._body]

    @staticmethod
    def from_descriptor(
        input_length: int, num_classes: int, descriptor: Sequence[Sequence[int]]
    ) -> "Body":
        names = list(activation_fn)
        layers = []
        for code, _, out_dim, kernel_size, activation in descriptor[:-1]:
            params = {"layer_type": Layer.type_from_code(code), "out_dim": out_dim}
            if kernel_size:
                params["kernel_size"] = kernel_size
            params["activation"] = names[activation]
            layers.append(params)
        body = Body(input_length, num_classes, layers)
        if [tuple(d) for d in descriptor] != body.descriptor():
            raise ValueError("architecture descriptor is inconsistent")
        return body

    def _build_network(self) -> nn.ModuleList:
        body = nn.ModuleList()
        input_size = IQ_CHANNELS
        for params in self._layer_params:
            params = dict(params)
            if params["layer_type"] == "flatten":
                params["out_dim"] = input_size * self.input_length
            if params["layer_type"] == "linear" and body and body[-1].layer_type == "conv1d":
                raise ValueError("a flatten layer must separate conv1d and linear layers")
            layer = Layer.build(input_size, **params)
            input_size = params["out_dim"]
            body.append(layer)
        body.append(Layer.build(input_size, layer_type="linear", out_dim=self.num_classes))
        return body
