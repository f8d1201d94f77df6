"""Pure-numpy 1D convolution kernels (cross-correlation, zero padding).

Fallback backend when the compiled extension is unavailable. Shapes:
input [B, Cin, L], weight [Cout, Cin, K], output [B, Cout, Lout] with
Lout = (L + 2*padding - K) // stride + 1.
"""

from __future__ import annotations

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view


def _pad(x: np.ndarray, padding: int) -> np.ndarray:
    if padding == 0:
        return x
    return np.pad(x, ((0, 0), (0, 0), (padding, padding)))


def _windows(xp: np.ndarray, kernel: int, stride: int) -> np.ndarray:
    # [B, Cin, Lout, K] view over the padded input
    return sliding_window_view(xp, kernel, axis=2)[:, :, ::stride, :]


def conv1d_forward(x: np.ndarray, w: np.ndarray, stride: int, padding: int) -> np.ndarray:
    kernel = w.shape[2]
    view = _windows(_pad(x, padding), kernel, stride)
    out = np.tensordot(view, w, axes=([1, 3], [1, 2]))  # [B, Lout, Cout]
    return np.ascontiguousarray(out.transpose(0, 2, 1))


def conv1d_backward(
    x: np.ndarray, w: np.ndarray, grad_out: np.ndarray, stride: int, padding: int
) -> tuple[np.ndarray, np.ndarray]:
    """Gradients w.r.t. input and weight given grad_out [B, Cout, Lout]."""
    batch, _, length = x.shape
    kernel = w.shape[2]
    lout = grad_out.shape[2]
    xp = _pad(x, padding)
    view = _windows(xp, kernel, stride)

    grad_w = np.tensordot(grad_out, view, axes=([0, 2], [0, 2]))  # [Cout, Cin, K]

    # [B, Lout, Cin, K] -> scatter back onto the padded grid, one tap at a time
    taps = np.tensordot(grad_out, w, axes=(1, 0)).transpose(0, 2, 1, 3)
    grad_xp = np.zeros_like(xp)
    for k in range(kernel):
        grad_xp[:, :, k : k + stride * lout : stride] += taps[:, :, :, k]
    if padding:
        grad_x = grad_xp[:, :, padding : padding + length].copy()
    else:
        grad_x = grad_xp
    return grad_x, np.ascontiguousarray(grad_w)
