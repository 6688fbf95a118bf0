"""Minimal reverse-mode autodiff stack: tensor, ops, layers, losses, optim."""
from .tensor import Tensor
from .functional import (
    concat_channels,
    conv2d,
    dropout,
    flatten,
    gelu,
    maxpool2d,
    relu,
    sigmoid,
    softmax,
    softplus,
)
from .layers import Conv2d, DenseBlock, DenseLayer, Linear, kaiming_normal
from .losses import combined_loss, cross_entropy, l1_loss, mse_loss
from .optim import Adam, adam_step

__all__ = [
    "Tensor",
    "conv2d",
    "maxpool2d",
    "concat_channels",
    "relu",
    "gelu",
    "sigmoid",
    "softplus",
    "softmax",
    "dropout",
    "flatten",
    "Conv2d",
    "Linear",
    "DenseLayer",
    "DenseBlock",
    "kaiming_normal",
    "mse_loss",
    "cross_entropy",
    "l1_loss",
    "combined_loss",
    "Adam",
    "adam_step",
]
