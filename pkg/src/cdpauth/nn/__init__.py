"""Minimal numpy neural-network stack: autodiff engine, layers, Adam, grad check."""

from .engine import (
    Tensor,
    bce_with_logits,
    concat_channels,
    conv2d,
    dense,
    flatten,
    maxpool2,
    mse_loss,
    no_grad,
    relu,
    sigmoid,
    softmax_cross_entropy,
    upsample2,
)
from .gradcheck import BlockReport, GradCheckReport, grad_check
from .layers import Conv2d, Dense, Module, Parameter
from .optim import Adam, AdamState, adam_step, init_adam

__all__ = [
    "Tensor",
    "no_grad",
    "conv2d",
    "dense",
    "relu",
    "sigmoid",
    "maxpool2",
    "upsample2",
    "concat_channels",
    "flatten",
    "mse_loss",
    "softmax_cross_entropy",
    "bce_with_logits",
    "Parameter",
    "Module",
    "Conv2d",
    "Dense",
    "Adam",
    "AdamState",
    "init_adam",
    "adam_step",
    "grad_check",
    "GradCheckReport",
    "BlockReport",
]
