"""Differentiable array operations: convolution, pooling, activations.

All image tensors are single samples laid out [channels, height, width];
kernels are [out_channels, in_channels, k, k].  Batching is done by the
training loop, not by these ops.
"""
from __future__ import annotations

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view
from scipy.special import erf

from .tensor import Tensor

_INV_SQRT2 = 1.0 / np.sqrt(2.0)
_INV_SQRT2PI = 1.0 / np.sqrt(2.0 * np.pi)


def _im2col(xp: np.ndarray, k: int, stride: int):
    """[C,Hp,Wp] -> column matrix [C*k*k, Ho*Wo] of row-major k x k patches."""
    win = sliding_window_view(xp, (k, k), axis=(1, 2))[:, ::stride, ::stride]
    c, ho, wo = win.shape[0], win.shape[1], win.shape[2]
    cols = win.transpose(0, 3, 4, 1, 2).reshape(c * k * k, ho * wo)
    return np.ascontiguousarray(cols), ho, wo


def _col2im(dcols: np.ndarray, c: int, hp: int, wp: int, k: int, stride: int,
            ho: int, wo: int) -> np.ndarray:
    """Scatter-add column gradients back onto the padded input grid."""
    dxp = np.zeros((c, hp, wp))
    d = dcols.reshape(c, k, k, ho, wo)
    for ki in range(k):
        for kj in range(k):
            dxp[:, ki:ki + ho * stride:stride, kj:kj + wo * stride:stride] += d[:, ki, kj]
    return dxp


def conv2d(x: Tensor, kernels: Tensor, stride: int = 1, padding: int = 0) -> Tensor:
    """2D cross-correlation of [C_in,H,W] with [C_out,C_in,k,k] kernels."""
    cin, h, w = x.data.shape
    cout, kcin, k, k2 = kernels.data.shape
    if k != k2:
        raise ValueError(f"kernels must be square, got {k}x{k2}")
    if kcin != cin:
        raise ValueError(
            f"input has {cin} channels but kernels expect {kcin}"
        )
    if stride < 1:
        raise ValueError(f"stride must be >= 1, got {stride}")
    if k > h + 2 * padding or k > w + 2 * padding:
        raise ValueError(
            f"kernel size {k} exceeds padded input {h + 2 * padding}x{w + 2 * padding}"
        )

    xp = np.pad(x.data, ((0, 0), (padding, padding), (padding, padding)))
    cols, ho, wo = _im2col(xp, k, stride)
    kmat = kernels.data.reshape(cout, cin * k * k)
    out = Tensor((kmat @ cols).reshape(cout, ho, wo), (x, kernels))

    def _backward():
        g = out.grad.reshape(cout, ho * wo)
        kernels._accumulate((g @ cols.T).reshape(kernels.data.shape))
        dcols = kmat.T @ g
        dxp = _col2im(dcols, cin, xp.shape[1], xp.shape[2], k, stride, ho, wo)
        if padding:
            dxp = dxp[:, padding:-padding, padding:-padding]
        x._accumulate(dxp)

    out._backward = _backward
    return out


def maxpool2d(x: Tensor, window: int, stride: int | None = None) -> Tensor:
    """Max pooling; gradient routes to the first maximum in row-major scan."""
    if stride is None:
        stride = window
    c, h, w = x.data.shape
    if window > h or window > w:
        raise ValueError(f"pool window {window} exceeds input {h}x{w}")

    win = sliding_window_view(x.data, (window, window), axis=(1, 2))[:, ::stride, ::stride]
    ho, wo = win.shape[1], win.shape[2]
    flat = win.reshape(c, ho, wo, window * window)
    # np.argmax picks the first maximum, i.e. row-major order inside the window
    idx = flat.argmax(axis=3)
    out = Tensor(np.take_along_axis(flat, idx[..., None], axis=3)[..., 0], (x,))

    def _backward():
        dx = np.zeros_like(x.data)
        ci, ii, jj = np.meshgrid(np.arange(c), np.arange(ho), np.arange(wo),
                                 indexing="ij")
        rows = ii * stride + idx // window
        cols = jj * stride + idx % window
        np.add.at(dx, (ci, rows, cols), out.grad)
        x._accumulate(dx)

    out._backward = _backward
    return out


def concat_channels(*tensors: Tensor) -> Tensor:
    """Channel-wise concatenation of [C_i,H,W] tensors sharing H and W."""
    if not tensors:
        raise ValueError("concat_channels needs at least one input")
    h, w = tensors[0].data.shape[1:]
    for t in tensors[1:]:
        if t.data.shape[1:] != (h, w):
            raise ValueError(
                f"spatial dims differ: {t.data.shape[1:]} vs {(h, w)}"
            )
    out = Tensor(np.concatenate([t.data for t in tensors], axis=0), tuple(tensors))
    splits = np.cumsum([t.data.shape[0] for t in tensors])[:-1]

    def _backward():
        for t, g in zip(tensors, np.split(out.grad, splits, axis=0)):
            t._accumulate(g)

    out._backward = _backward
    return out


def relu(x: Tensor) -> Tensor:
    out = Tensor(np.maximum(x.data, 0.0), (x,))

    def _backward():
        x._accumulate((x.data > 0) * out.grad)

    out._backward = _backward
    return out


def gelu(x: Tensor) -> Tensor:
    """Gaussian error linear unit, exact CDF form x * Phi(x)."""
    phi = 0.5 * (1.0 + erf(x.data * _INV_SQRT2))
    out = Tensor(x.data * phi, (x,))

    def _backward():
        pdf = np.exp(-0.5 * x.data * x.data) * _INV_SQRT2PI
        x._accumulate((phi + x.data * pdf) * out.grad)

    out._backward = _backward
    return out


def sigmoid(x: Tensor) -> Tensor:
    s = 1.0 / (1.0 + np.exp(-x.data))
    out = Tensor(s, (x,))

    def _backward():
        x._accumulate(s * (1.0 - s) * out.grad)

    out._backward = _backward
    return out


def softplus(x: Tensor) -> Tensor:
    """log(1 + exp(x)), evaluated stably; smooth non-negative squash."""
    out = Tensor(np.logaddexp(0.0, x.data), (x,))

    def _backward():
        x._accumulate(out.grad / (1.0 + np.exp(-x.data)))

    out._backward = _backward
    return out


def softmax(logits: Tensor) -> Tensor:
    """Softmax over a 1D logits vector; outputs sum to 1."""
    if logits.data.ndim != 1:
        raise ValueError(f"softmax expects a vector, got shape {logits.data.shape}")
    z = logits.data - logits.data.max()
    e = np.exp(z)
    p = e / e.sum()
    out = Tensor(p, (logits,))

    def _backward():
        g = out.grad
        logits._accumulate(p * (g - np.dot(g, p)))

    out._backward = _backward
    return out


def dropout(x: Tensor, rate: float, training: bool, rng) -> Tensor:
    """Inverted dropout: zero entries with probability `rate` in training.

    `rng` is a seed or numpy Generator; inference mode is the identity.
    """
    if not 0.0 <= rate < 1.0:
        raise ValueError(f"dropout rate must be in [0, 1), got {rate}")
    if not training or rate == 0.0:
        return x
    if not isinstance(rng, np.random.Generator):
        rng = np.random.default_rng(rng)
    keep = (rng.random(x.data.shape) >= rate) / (1.0 - rate)
    out = Tensor(x.data * keep, (x,))

    def _backward():
        x._accumulate(keep * out.grad)

    out._backward = _backward
    return out


def flatten(x: Tensor) -> Tensor:
    return x.reshape(x.data.size)
