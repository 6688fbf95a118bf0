"""Training losses: spectral MSE, cross-entropy, L1, and their blend."""
from __future__ import annotations

import numpy as np

from .tensor import Tensor


def mse_loss(pred: Tensor, target) -> Tensor:
    """Mean squared error (1/n) * ||pred - target||^2."""
    t = target.data if isinstance(target, Tensor) else np.asarray(target, float)
    if pred.data.shape != t.shape:
        raise ValueError(f"shape mismatch: pred {pred.data.shape} vs target {t.shape}")
    n = pred.data.size
    diff = pred.data - t
    out = Tensor(np.dot(diff.ravel(), diff.ravel()) / n, (pred,))

    def _backward():
        pred._accumulate((2.0 / n) * diff * out.grad)

    out._backward = _backward
    return out


def cross_entropy(probs: Tensor, label: int) -> Tensor:
    """-log(probs[label]) for a probability vector (softmax output)."""
    k = probs.data.shape[0]
    if not 0 <= label < k:
        raise ValueError(f"label {label} out of range for {k} classes")
    out = Tensor(-np.log(probs.data[label]), (probs,))

    def _backward():
        g = np.zeros_like(probs.data)
        g[label] = -1.0 / probs.data[label]
        probs._accumulate(g * out.grad)

    out._backward = _backward
    return out


def l1_loss(pred: Tensor, target) -> Tensor:
    """Mean absolute error; the subgradient at exact ties is 0."""
    t = target.data if isinstance(target, Tensor) else np.asarray(target, float)
    if pred.data.shape != t.shape:
        raise ValueError(f"shape mismatch: pred {pred.data.shape} vs target {t.shape}")
    if pred.data.size == 0:
        raise ValueError("l1_loss on an empty batch")
    n = pred.data.size
    diff = pred.data - t
    out = Tensor(np.abs(diff).sum() / n, (pred,))

    def _backward():
        pred._accumulate(np.sign(diff) / n * out.grad)

    out._backward = _backward
    return out


def combined_loss(task: Tensor, spectral: Tensor, alpha: float) -> Tensor:
    """alpha * task + (1 - alpha) * spectral; the joint training objective."""
    if not 0.0 <= alpha <= 1.0:
        raise ValueError(f"alpha must lie in [0, 1], got {alpha}")
    return task * alpha + spectral * (1.0 - alpha)
