"""Adam with bias-corrected moments (default settings: lr 1e-3,
beta1 0.9, beta2 0.999, epsilon 1e-8)."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .ops import NumericError
from .tensor import Tensor


@dataclass
class AdamState:
    lr: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8
    t: int = 0
    m: dict[str, np.ndarray] = field(default_factory=dict)
    v: dict[str, np.ndarray] = field(default_factory=dict)


def adam_step(params: dict[str, Tensor], grads: dict[str, np.ndarray], state: AdamState):
    """One Adam update, in place on ``params``. Deterministic given inputs."""
    state.t += 1
    bc1 = 1.0 - state.beta1**state.t
    bc2 = 1.0 - state.beta2**state.t
    for name, param in params.items():
        grad = grads.get(name)
        if grad is None:
            continue
        if not np.isfinite(grad).all():
            raise NumericError(f"non-finite gradient for parameter {name!r}")
        if name not in state.m:
            state.m[name] = np.zeros_like(param.data)
            state.v[name] = np.zeros_like(param.data)
        m = state.m[name]
        v = state.v[name]
        m *= state.beta1
        m += (1.0 - state.beta1) * grad
        v *= state.beta2
        v += (1.0 - state.beta2) * grad * grad
        param.data -= state.lr * (m / bc1) / (np.sqrt(v / bc2) + state.epsilon)
