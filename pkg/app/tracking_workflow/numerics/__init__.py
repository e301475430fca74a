"""Minimal differentiable-compute kernel."""

from app.tracking_workflow.numerics.arrays import (
    as_array,
    assert_finite,
    default_dtype,
    softmax_rows,
    stable_sigmoid,
)
from app.tracking_workflow.numerics.checkpoint import load_checkpoint, save_checkpoint
from app.tracking_workflow.numerics.gradcheck import check_network, grad_check
from app.tracking_workflow.numerics.layers import (
    Concat,
    Conv1d,
    Conv2d,
    Dropout,
    Embedding,
    Flatten,
    Layer,
    LayerKind,
    LayerSpec,
    Linear,
    ReLU,
    Sigmoid,
    SoftmaxRows,
    UpsampleConv2d,
)
from app.tracking_workflow.numerics.module import Module
from app.tracking_workflow.numerics.network import Sequential
from app.tracking_workflow.numerics.optimizers import (
    Optimizer,
    OptimizerKind,
    OptimizerState,
    optimizer_step,
)

__all__ = [
    "Concat",
    "Conv1d",
    "Conv2d",
    "Dropout",
    "Embedding",
    "Flatten",
    "Layer",
    "LayerKind",
    "LayerSpec",
    "Linear",
    "Module",
    "Optimizer",
    "OptimizerKind",
    "OptimizerState",
    "ReLU",
    "Sequential",
    "Sigmoid",
    "SoftmaxRows",
    "UpsampleConv2d",
    "as_array",
    "assert_finite",
    "check_network",
    "default_dtype",
    "grad_check",
    "load_checkpoint",
    "optimizer_step",
    "save_checkpoint",
    "softmax_rows",
    "stable_sigmoid",
]
