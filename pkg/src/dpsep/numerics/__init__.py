"""Tensor arithmetic with reverse-mode differentiation and recurrent primitives."""

from .checkpoint import CheckpointError, load_arrays, save_arrays
from .conv import conv1d, transposed_conv1d
from .gradcheck import FiniteDiffReport, finite_diff_check
from .rnn import (
    LstmCellParams,
    bilstm,
    bilstm_batched,
    init_lstm_params,
    lstm_sequence,
    lstm_step,
)
from .tensor import (
    GradTape,
    NumericsError,
    ShapeError,
    Tensor,
    add,
    affine,
    apply_op,
    backward,
    concat,
    div,
    elementwise,
    exp,
    index_axis0,
    log,
    mul,
    neg,
    nan_checks_enabled,
    ones,
    pad_last_axis,
    relu,
    reshape,
    set_nan_checks,
    sigmoid,
    slice_axis,
    sqrt,
    stack,
    sub,
    tanh,
    tmean,
    transpose,
    tsum,
    zero_grads,
    zeros,
)

__all__ = [
    "CheckpointError",
    "FiniteDiffReport",
    "GradTape",
    "LstmCellParams",
    "NumericsError",
    "ShapeError",
    "Tensor",
    "add",
    "affine",
    "apply_op",
    "backward",
    "bilstm",
    "bilstm_batched",
    "concat",
    "conv1d",
    "div",
    "elementwise",
    "exp",
    "finite_diff_check",
    "index_axis0",
    "init_lstm_params",
    "load_arrays",
    "log",
    "lstm_sequence",
    "lstm_step",
    "mul",
    "nan_checks_enabled",
    "neg",
    "ones",
    "pad_last_axis",
    "relu",
    "reshape",
    "save_arrays",
    "set_nan_checks",
    "sigmoid",
    "slice_axis",
    "sqrt",
    "stack",
    "sub",
    "tanh",
    "tmean",
    "transposed_conv1d",
    "transpose",
    "tsum",
    "zero_grads",
    "zeros",
]
