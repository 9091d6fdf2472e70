"""Small reverse-mode autodiff engine on float64 numpy arrays."""
from .tensor import Tape, Tensor, active_tape, backward, zero_grads
from .ops import (
    EPS_COSINE,
    add,
    bias_add,
    broadcast_to,
    concat,
    constant,
    conv2d,
    conv2d_nhwc,
    cosine_similarity,
    dropout,
    gather,
    matmul,
    mul,
    reduce_mean,
    reduce_sum,
    relu,
    reshape,
    scale,
    select_index,
    softmax_cross_entropy,
    stack,
    sub,
    transpose,
)
from .optim import AdamState, adam_step
from .check import gradient_check
from .serial import MAGIC, load_tensors, save_tensors

__all__ = [
    "Tape", "Tensor", "active_tape", "backward", "zero_grads",
    "EPS_COSINE", "add", "bias_add", "broadcast_to", "concat", "constant",
    "conv2d", "conv2d_nhwc", "cosine_similarity", "dropout", "gather",
    "matmul", "mul", "reduce_mean", "reduce_sum", "relu", "reshape",
    "scale", "select_index", "softmax_cross_entropy", "stack", "sub",
    "transpose",
    "AdamState", "adam_step", "gradient_check",
    "MAGIC", "load_tensors", "save_tensors",
]
