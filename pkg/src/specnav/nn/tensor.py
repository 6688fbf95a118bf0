"""Reverse-mode automatic differentiation over dense float64 arrays.

Every operation returns a new Tensor that remembers its parents and a
closure pushing gradients back to them.  backward() linearises the graph
once (topological order) and replays the closures in reverse, so each
node's gradient is complete before it propagates further.
"""
from __future__ import annotations

import numpy as np


def _unbroadcast(grad: np.ndarray, shape: tuple) -> np.ndarray:
    """Sum `grad` down to `shape`, undoing numpy broadcasting."""
    if grad.shape == shape:
        return grad
    while grad.ndim > len(shape):
        grad = grad.sum(axis=0)
    for axis, n in enumerate(shape):
        if n == 1 and grad.shape[axis] != 1:
            grad = grad.sum(axis=axis, keepdims=True)
    return grad


class Tensor:
    """Dense float64 array plus gradient bookkeeping."""

    __slots__ = ("data", "grad", "_parents", "_backward")

    def __init__(self, data, _parents=()):
        self.data = np.asarray(data, dtype=np.float64)
        self.grad = None
        self._parents = _parents
        self._backward = None

    @property
    def shape(self):
        return self.data.shape

    @property
    def size(self):
        return self.data.size

    def _accumulate(self, g: np.ndarray) -> None:
        if self.grad is None:
            self.grad = np.array(g, dtype=np.float64, copy=True)
        else:
            self.grad = self.grad + g

    # -- graph traversal ---------------------------------------------------

    def _tape(self) -> list:
        """Operations reachable from this node, in topological order."""
        order, seen = [], set()
        stack = [(self, False)]
        while stack:
            node, expanded = stack.pop()
            if expanded:
                order.append(node)
                continue
            if id(node) in seen:
                continue
            seen.add(id(node))
            stack.append((node, True))
            for p in node._parents:
                if id(p) not in seen:
                    stack.append((p, False))
        return order

    def backward(self) -> None:
        """Populate .grad on every node reachable from this scalar."""
        if self.data.size != 1:
            raise ValueError(
                f"backward() needs a scalar output, got shape {self.data.shape}"
            )
        tape = self._tape()
        self.grad = np.ones_like(self.data)
        for node in reversed(tape):
            if node._backward is not None:
                node._backward()

    # -- elementwise arithmetic (numpy broadcasting rules) -------------------

    @staticmethod
    def _lift(x) -> "Tensor":
        return x if isinstance(x, Tensor) else Tensor(x)

    def __add__(self, other):
        other = Tensor._lift(other)
        out = Tensor(self.data + other.data, (self, other))

        def _backward():
            self._accumulate(_unbroadcast(out.grad, self.data.shape))
            other._accumulate(_unbroadcast(out.grad, other.data.shape))

        out._backward = _backward
        return out

    def __mul__(self, other):
        other = Tensor._lift(other)
        out = Tensor(self.data * other.data, (self, other))

        def _backward():
            self._accumulate(_unbroadcast(other.data * out.grad, self.data.shape))
            other._accumulate(_unbroadcast(self.data * out.grad, other.data.shape))

        out._backward = _backward
        return out

    def __neg__(self):
        return self * -1.0

    def __sub__(self, other):
        return self + (-Tensor._lift(other))

    def __radd__(self, other):
        return self + other

    def __rmul__(self, other):
        return self * other

    def __rsub__(self, other):
        return Tensor._lift(other) + (-self)

    def __matmul__(self, other):
        """Matrix product; supports 2D @ 1D and 2D @ 2D."""
        other = Tensor._lift(other)
        out = Tensor(self.data @ other.data, (self, other))

        def _backward():
            g = out.grad
            if other.data.ndim == 1:
                self._accumulate(np.outer(g, other.data))
                other._accumulate(self.data.T @ g)
            else:
                self._accumulate(g @ other.data.T)
                other._accumulate(self.data.T @ g)

        out._backward = _backward
        return out

    # -- shape and reductions ------------------------------------------------

    def reshape(self, *shape):
        out = Tensor(self.data.reshape(*shape), (self,))

        def _backward():
            self._accumulate(out.grad.reshape(self.data.shape))

        out._backward = _backward
        return out

    def sum(self):
        out = Tensor(self.data.sum(), (self,))

        def _backward():
            self._accumulate(np.broadcast_to(out.grad, self.data.shape))

        out._backward = _backward
        return out

    def mean(self):
        return self.sum() * (1.0 / self.data.size)

    def item(self) -> float:
        return self.data.item()

    def __repr__(self):
        return f"Tensor(shape={self.data.shape})"
