"""Convolution kernel backend selection.

At import time the compiled extension is preferred; the numpy kernels are
the fallback. ``AFRESNET_BACKEND`` overrides: ``cython``, ``numpy`` or
``auto``. :func:`use` switches at runtime (used by tests and the kernel
benchmark). Results are deterministic within a backend; the two backends
agree to ~1e-12 but not bitwise (different summation orders).
"""

from __future__ import annotations

import os

from . import _conv_np

try:
    from . import _conv_cy
except ImportError:
    _conv_cy = None

_IMPLS = {"numpy": _conv_np}
if _conv_cy is not None:
    _IMPLS["cython"] = _conv_cy

conv1d_forward = None
conv1d_backward = None
name = None


def available() -> tuple[str, ...]:
    return tuple(sorted(_IMPLS))


def use(backend: str) -> str:
    """Select the kernel backend; returns the name actually selected."""
    global conv1d_forward, conv1d_backward, name
    backend = backend.strip().lower() or "auto"
    if backend == "auto":
        backend = "cython" if "cython" in _IMPLS else "numpy"
    if backend not in _IMPLS:
        raise ValueError(
            f"unknown or unavailable backend {backend!r}; available: {available()}"
        )
    impl = _IMPLS[backend]
    conv1d_forward = impl.conv1d_forward
    conv1d_backward = impl.conv1d_backward
    name = backend
    return backend


use(os.environ.get("AFRESNET_BACKEND", "auto"))
