"""Deterministic float64 tensor engine: layer kernels, losses, Adam, checkpoints."""

from tdsl.engine.adam import AdamState, adam_step
from tdsl.engine.checkpoint import load_params, save_params
from tdsl.engine.gradcheck import max_relative_error, numerical_gradient
from tdsl.engine.losses import log_softmax, mse_consistency, softmax, softmax_cross_entropy
from tdsl.engine.ops import (
    ConvCache,
    LayerGrad,
    PoolCache,
    conv2d_backward,
    conv2d_forward,
    dense_backward,
    dense_forward,
    dropout,
    dropout_backward,
    embedding_backward,
    embedding_forward,
    maxpool2d_backward,
    maxpool2d_forward,
)

__all__ = [
    "AdamState",
    "adam_step",
    "load_params",
    "save_params",
    "max_relative_error",
    "numerical_gradient",
    "log_softmax",
    "softmax",
    "softmax_cross_entropy",
    "mse_consistency",
    "LayerGrad",
    "ConvCache",
    "PoolCache",
    "conv2d_forward",
    "conv2d_backward",
    "maxpool2d_forward",
    "maxpool2d_backward",
    "dropout",
    "dropout_backward",
    "dense_forward",
    "dense_backward",
    "embedding_forward",
    "embedding_backward",
]
