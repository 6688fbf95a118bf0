"""Adam optimizer with bias correction."""
from __future__ import annotations

import numpy as np

from .tensor import Tensor


class Adam:
    """Standard Adam over a fixed parameter list.

    Moment buffers mirror each parameter's shape; the step counter
    advances by one per update.  Parameters whose .grad is None are
    skipped (nothing reached them in the backward pass).
    """

    def __init__(self, params: list[Tensor], lr: float = 1e-3,
                 beta1: float = 0.9, beta2: float = 0.999, eps: float = 1e-8):
        self.params = list(params)
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.m = [np.zeros_like(p.data) for p in self.params]
        self.v = [np.zeros_like(p.data) for p in self.params]
        self.t = 0

    def zero_grad(self) -> None:
        for p in self.params:
            p.grad = None

    def step(self) -> None:
        self.t += 1
        bc1 = 1.0 - self.beta1 ** self.t
        bc2 = 1.0 - self.beta2 ** self.t
        for i, p in enumerate(self.params):
            if p.grad is None:
                continue
            g = p.grad
            self.m[i] = self.beta1 * self.m[i] + (1.0 - self.beta1) * g
            self.v[i] = self.beta2 * self.v[i] + (1.0 - self.beta2) * (g * g)
            m_hat = self.m[i] / bc1
            v_hat = self.v[i] / bc2
            p.data = p.data - self.lr * m_hat / (np.sqrt(v_hat) + self.eps)


def adam_step(params: list[Tensor], grads: list[np.ndarray], state: Adam) -> Adam:
    """Functional entry point: install grads, take one step, return state."""
    if len(params) != len(grads):
        raise ValueError("params and grads length mismatch")
    for p, g in zip(params, grads):
        if g is not None and np.shape(g) != p.data.shape:
            raise ValueError(f"grad shape {np.shape(g)} != param shape {p.data.shape}")
        p.grad = None if g is None else np.asarray(g, float)
    state.step()
    return state
