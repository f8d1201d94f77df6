"""The layer set: 1D convolution, batch norm, ReLU, residual add, global
average pooling, dense, and softmax cross-entropy.

All ops take and return :class:`~afresnet.nn.tensor.Tensor` and record the
backward graph. Convolution dispatches to the selected kernel backend;
everything else is vectorized numpy (cheap relative to the convolutions).
"""

from __future__ import annotations

import numpy as np

from . import backend
from .tensor import ShapeError, Tensor, record


class NumericError(ArithmeticError):
    """Non-finite value where a finite one is required."""


def conv1d(x: Tensor, weight: Tensor, stride: int = 1, padding: int = 0) -> Tensor:
    """Cross-correlation with zero padding, no bias.

    x [B, Cin, L], weight [Cout, Cin, K] -> [B, Cout, Lout] with
    Lout = (L + 2*padding - K) // stride + 1.
    """
    if x.data.ndim != 3 or weight.data.ndim != 3:
        raise ShapeError("conv1d expects rank-3 input and weight")
    batch, cin, length = x.data.shape
    cout, w_cin, kernel = weight.data.shape
    if w_cin != cin:
        raise ShapeError(f"conv1d channel mismatch: input {cin}, weight {w_cin}")
    lout = (length + 2 * padding - kernel) // stride + 1
    if lout < 1:
        raise ShapeError(
            f"conv1d output collapsed: L={length}, K={kernel}, "
            f"stride={stride}, padding={padding}"
        )
    out = Tensor(backend.conv1d_forward(x.data, weight.data, stride, padding))

    def _backward(grad_out):
        grad_x, grad_w = backend.conv1d_backward(
            x.data, weight.data, grad_out, stride, padding
        )
        x.accumulate_grad(grad_x)
        weight.accumulate_grad(grad_w)

    return record(out, (x, weight), _backward)


def batchnorm(
    x: Tensor,
    gamma: Tensor,
    beta: Tensor,
    running_mean: np.ndarray,
    running_var: np.ndarray,
    mode: str = "train",
    eps: float = 1e-5,
    momentum: float = 0.1,
) -> Tensor:
    """Per-channel batch normalization over (batch, length).

    Train mode normalizes by batch statistics (population variance) and
    updates the running buffers in place:
    running <- (1 - momentum) * running + momentum * batch.
    Eval mode is a pure function of the running statistics.
    """
    if eps <= 0:
        raise ValueError(f"batchnorm eps must be > 0, got {eps}")
    if x.data.ndim != 3:
        raise ShapeError("batchnorm expects rank-3 input [B, C, L]")
    batch, channels, length = x.data.shape
    if gamma.data.shape != (channels,) or beta.data.shape != (channels,):
        raise ShapeError("batchnorm gamma/beta must have one value per channel")

    if mode == "train":
        if batch * length < 2:
            raise ShapeError(
                "batchnorm train mode needs at least 2 values per channel"
            )
        mean = x.data.mean(axis=(0, 2))
        var = x.data.var(axis=(0, 2))
        running_mean *= 1.0 - momentum
        running_mean += momentum * mean
        running_var *= 1.0 - momentum
        running_var += momentum * var
    elif mode == "eval":
        mean = running_mean
        var = running_var
    else:
        raise ValueError(f"batchnorm mode must be 'train' or 'eval', got {mode!r}")

    inv_std = 1.0 / np.sqrt(var + eps)
    x_hat = (x.data - mean[None, :, None]) * inv_std[None, :, None]
    out = Tensor(gamma.data[None, :, None] * x_hat + beta.data[None, :, None])

    def _backward(grad_out):
        gamma.accumulate_grad((grad_out * x_hat).sum(axis=(0, 2)))
        beta.accumulate_grad(grad_out.sum(axis=(0, 2)))
        grad_hat = grad_out * gamma.data[None, :, None]
        if mode == "train":
            term = (
                grad_hat
                - grad_hat.mean(axis=(0, 2), keepdims=True)
                - x_hat * (grad_hat * x_hat).mean(axis=(0, 2), keepdims=True)
            )
            x.accumulate_grad(term * inv_std[None, :, None])
        else:
            x.accumulate_grad(grad_hat * inv_std[None, :, None])

    return record(out, (x, gamma, beta), _backward)


def relu(x: Tensor) -> Tensor:
    mask = x.data > 0
    out = Tensor(np.where(mask, x.data, 0.0))

    def _backward(grad_out):
        x.accumulate_grad(grad_out * mask)

    return record(out, (x,), _backward)


def add(a: Tensor, b: Tensor) -> Tensor:
    """Elementwise sum; shapes must be identical (no broadcasting)."""
    if a.data.shape != b.data.shape:
        raise ShapeError(f"add shape mismatch: {a.data.shape} vs {b.data.shape}")
    out = Tensor(a.data + b.data)

    def _backward(grad_out):
        a.accumulate_grad(grad_out)
        b.accumulate_grad(grad_out)

    return record(out, (a, b), _backward)


def global_avg_pool(x: Tensor) -> Tensor:
    """Mean over the length axis: [B, C, L] -> [B, C]."""
    if x.data.ndim != 3:
        raise ShapeError("global_avg_pool expects rank-3 input [B, C, L]")
    length = x.data.shape[2]
    out = Tensor(x.data.mean(axis=2))

    def _backward(grad_out):
        x.accumulate_grad(
            np.broadcast_to(grad_out[:, :, None] / length, x.data.shape)
        )

    return record(out, (x,), _backward)


def dense(x: Tensor, weight: Tensor, bias: Tensor) -> Tensor:
    """Affine map: [B, C] @ [C, O] + [O] -> [B, O]."""
    if x.data.ndim != 2 or weight.data.ndim != 2:
        raise ShapeError("dense expects rank-2 input and weight")
    if x.data.shape[1] != weight.data.shape[0]:
        raise ShapeError(
            f"dense shape mismatch: input {x.data.shape} vs weight {weight.data.shape}"
        )
    if bias.data.shape != (weight.data.shape[1],):
        raise ShapeError("dense bias must have one value per output")
    out = Tensor(x.data @ weight.data + bias.data)

    def _backward(grad_out):
        x.accumulate_grad(grad_out @ weight.data.T)
        weight.accumulate_grad(x.data.T @ grad_out)
        bias.accumulate_grad(grad_out.sum(axis=0))

    return record(out, (x, weight, bias), _backward)


def stable_softmax(logits: np.ndarray) -> np.ndarray:
    """Row-wise softmax stabilized by max subtraction."""
    shifted = logits - logits.max(axis=1, keepdims=True)
    exp = np.exp(shifted)
    return exp / exp.sum(axis=1, keepdims=True)


def softmax_cross_entropy(logits: Tensor, labels) -> tuple[Tensor, np.ndarray]:
    """Mean negative log softmax probability of the true class.

    Returns (scalar loss, probabilities [B, n_classes]). The probability
    array is plain data, outside the graph.
    """
    if logits.data.ndim != 2:
        raise ShapeError("softmax_cross_entropy expects rank-2 logits")
    if not np.isfinite(logits.data).all():
        raise NumericError("non-finite logits")
    labels = np.asarray(labels, dtype=np.intp)
    batch, n_classes = logits.data.shape
    if batch < 1:
        raise ShapeError("softmax_cross_entropy needs at least one row")
    if labels.shape != (batch,):
        raise ShapeError("labels must be one class index per row")
    if labels.min() < 0 or labels.max() >= n_classes:
        raise ValueError("label out of range")

    shifted = logits.data - logits.data.max(axis=1, keepdims=True)
    log_z = np.log(np.exp(shifted).sum(axis=1))
    log_probs = shifted - log_z[:, None]
    probs = np.exp(log_probs)
    loss = Tensor(-log_probs[np.arange(batch), labels].mean())

    def _backward(grad_out):
        grad = probs.copy()
        grad[np.arange(batch), labels] -= 1.0
        logits.accumulate_grad(grad * (float(grad_out) / batch))

    return record(loss, (logits,), _backward), probs
