from . import backend, ops
from .adam import AdamState, adam_step
from .ops import NumericError
from .tensor import GraphStateError, ShapeError, Tensor, backward, no_grad

__all__ = [
    "AdamState",
    "GraphStateError",
    "NumericError",
    "ShapeError",
    "Tensor",
    "adam_step",
    "backend",
    "backward",
    "no_grad",
    "ops",
]
