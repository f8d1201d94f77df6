"""Configurable 1D ResNets for atrial fibrillation detection.

Library + CLI covering the full loop: an architecture configuration
grammar, a minimal differentiable tensor core with compiled convolution
kernels, exact parameter counting against a published 30-entry reference
grid, an ECG data pipeline with oversampled random-crop augmentation,
and a seeded training / evaluation / benchmark harness.
"""

__version__ = "0.1.0"

from .config import (
    ConfigParseError,
    ConfigValidationError,
    ModelConfig,
    format_config,
    parse_config,
    validate,
)
from .model import (
    Network,
    analytic_param_count,
    build_model,
    count_parameters,
    forward,
    load_checkpoint,
    preset,
    resolve_model,
    save_checkpoint,
)

__all__ = [
    "ConfigParseError",
    "ConfigValidationError",
    "ModelConfig",
    "Network",
    "analytic_param_count",
    "build_model",
    "count_parameters",
    "format_config",
    "forward",
    "load_checkpoint",
    "parse_config",
    "preset",
    "resolve_model",
    "save_checkpoint",
    "validate",
    "__version__",
]
