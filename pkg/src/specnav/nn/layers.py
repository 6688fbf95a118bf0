"""Parameterised layers built on the functional ops."""
from __future__ import annotations

import numpy as np

from . import functional as F
from .tensor import Tensor


def kaiming_normal(shape: tuple, fan_in: int, rng: np.random.Generator) -> np.ndarray:
    """Fan-in scaled normal init, std = sqrt(2 / fan_in)."""
    return rng.normal(0.0, np.sqrt(2.0 / fan_in), size=shape)


class Conv2d:
    """Convolution with bias; weight [C_out, C_in, k, k]."""

    def __init__(self, c_in: int, c_out: int, k: int, stride: int = 1,
                 padding: int = 0, rng: np.random.Generator | None = None):
        rng = rng if rng is not None else np.random.default_rng(0)
        self.stride = stride
        self.padding = padding
        self.weight = Tensor(kaiming_normal((c_out, c_in, k, k), c_in * k * k, rng))
        self.bias = Tensor(np.zeros((c_out, 1, 1)))

    def __call__(self, x: Tensor) -> Tensor:
        return F.conv2d(x, self.weight, self.stride, self.padding) + self.bias

    def params(self) -> list[Tensor]:
        return [self.weight, self.bias]


class Linear:
    """Affine map W @ x + b on 1D inputs."""

    def __init__(self, n_in: int, n_out: int, rng: np.random.Generator | None = None):
        rng = rng if rng is not None else np.random.default_rng(0)
        self.weight = Tensor(kaiming_normal((n_out, n_in), n_in, rng))
        self.bias = Tensor(np.zeros(n_out))

    def __call__(self, x: Tensor) -> Tensor:
        return self.weight @ x + self.bias

    def params(self) -> list[Tensor]:
        return [self.weight, self.bias]


class DenseLayer:
    """One densely connected layer: concat all inputs, then ReLU(conv3x3).

    Adds `growth` new channels on top of whatever it receives.
    """

    def __init__(self, c_in: int, growth: int, rng: np.random.Generator | None = None):
        self.conv = Conv2d(c_in, growth, k=3, stride=1, padding=1, rng=rng)

    def __call__(self, inputs: list[Tensor]) -> Tensor:
        x = inputs[0] if len(inputs) == 1 else F.concat_channels(*inputs)
        return F.relu(self.conv(x))

    def params(self) -> list[Tensor]:
        return self.conv.params()


class DenseBlock:
    """Stack of DenseLayers; layer l sees the features of all layers < l.

    Output is the concatenation of the input with every layer's new
    channels: c_in + n_layers * growth channels total.
    """

    def __init__(self, c_in: int, growth: int, n_layers: int,
                 rng: np.random.Generator | None = None):
        self.layers = [
            DenseLayer(c_in + i * growth, growth, rng=rng) for i in range(n_layers)
        ]

    def __call__(self, x: Tensor) -> Tensor:
        feats = [x]
        for layer in self.layers:
            feats.append(layer(feats))
        return F.concat_channels(*feats)

    def params(self) -> list[Tensor]:
        return [p for layer in self.layers for p in layer.params()]
