"""Dense rank-<=3 tensor with graph-recorded reverse-mode gradients.

Every op in :mod:`afresnet.nn.ops` records its parents and a backward
closure on the output tensor; :func:`backward` replays them from a scalar
loss. Gradients accumulate across fan-out (skip connections use a value
twice), and all math runs in float64.
"""

from __future__ import annotations

from contextlib import contextmanager

import numpy as np


class GraphStateError(RuntimeError):
    """backward() called without a recorded forward graph."""


class ShapeError(ValueError):
    """Operands do not conform."""


_grad_enabled = True


@contextmanager
def no_grad():
    """Disable graph recording inside the block (inference paths)."""
    global _grad_enabled
    prev = _grad_enabled
    _grad_enabled = False
    try:
        yield
    finally:
        _grad_enabled = prev


def grad_enabled() -> bool:
    return _grad_enabled


class Tensor:
    __slots__ = ("data", "grad", "requires_grad", "_parents", "_backward_fn")

    def __init__(self, data, requires_grad: bool = False):
        arr = np.asarray(data, dtype=np.float64)
        if arr.ndim and not arr.flags["C_CONTIGUOUS"]:
            arr = np.ascontiguousarray(arr)
        if arr.ndim > 3:
            raise ShapeError(f"rank {arr.ndim} > 3 not supported")
        self.data = arr
        self.grad: np.ndarray | None = None
        self.requires_grad = requires_grad
        self._parents: tuple[Tensor, ...] = ()
        self._backward_fn = None

    @property
    def dims(self) -> tuple[int, ...]:
        return self.data.shape

    @property
    def size(self) -> int:
        return self.data.size

    def accumulate_grad(self, contribution: np.ndarray):
        if self.grad is None:
            self.grad = np.array(contribution, dtype=np.float64)
        else:
            self.grad += contribution

    def zero_grad(self):
        self.grad = None

    def detach(self) -> "Tensor":
        return Tensor(self.data.copy())

    def __repr__(self):
        return f"Tensor(shape={self.data.shape}, requires_grad={self.requires_grad})"


def record(out: Tensor, parents: tuple[Tensor, ...], backward_fn) -> Tensor:
    """Attach graph metadata to an op output (no-op under no_grad)."""
    if _grad_enabled and (
        any(p.requires_grad or p._parents for p in parents)
    ):
        out._parents = parents
        out._backward_fn = backward_fn
    return out


def backward(loss: Tensor):
    """Fill ``grad`` buffers of every tensor reachable from ``loss``.

    ``loss`` must be a scalar produced by a recorded forward pass.
    """
    if loss.data.ndim != 0:
        raise GraphStateError("backward requires a scalar loss")
    if loss._backward_fn is None:
        raise GraphStateError("no computation graph recorded for this tensor")

    # iterative post-order topological sort
    topo: list[Tensor] = []
    seen: set[int] = set()
    stack: list[tuple[Tensor, bool]] = [(loss, False)]
    while stack:
        node, expanded = stack.pop()
        if expanded:
            topo.append(node)
            continue
        if id(node) in seen:
            continue
        seen.add(id(node))
        stack.append((node, True))
        for parent in node._parents:
            if id(parent) not in seen:
                stack.append((parent, False))

    loss.grad = np.ones((), dtype=np.float64)
    for node in reversed(topo):
        if node._backward_fn is not None and node.grad is not None:
            node._backward_fn(node.grad)
