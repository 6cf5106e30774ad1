"""Minimal reverse-mode differentiation engine used by the CTAE model."""

from . import tensor as ops
from .gradcheck import grad_check
from .optim import AdamState, adam_step, clip_global_norm
from .params import ParameterSet
from .tensor import (
    ShapeError,
    Tensor,
    as_tensor,
    backward,
    checked_mode,
    layer_norm,
    matmul,
    no_grad,
    softmax_lastdim,
)

__all__ = [
    "AdamState",
    "ParameterSet",
    "ShapeError",
    "Tensor",
    "adam_step",
    "as_tensor",
    "backward",
    "checked_mode",
    "clip_global_norm",
    "grad_check",
    "layer_norm",
    "matmul",
    "no_grad",
    "ops",
    "softmax_lastdim",
]
