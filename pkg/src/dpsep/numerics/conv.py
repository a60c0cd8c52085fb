"""Strided 1-D convolution and its transpose, as single tape ops.

conv1d frames a (1, T) signal into L = floor((T-W)/stride)+1 windows and
dots each against N kernels; transposed_conv1d is its exact adjoint,
scattering weighted kernels back by overlap-add.
"""

import numpy as np

from .tensor import ShapeError, _needs, apply_op


def _windows(sig, width, stride, count):
    # (count, width) strided view over a 1-D array; read-only.
    view = np.lib.stride_tricks.sliding_window_view(sig, width)
    return view[::stride][:count]


def conv1d(signal, kernels, stride):
    """signal (1, T), kernels (N, W), stride >= 1 -> (N, L)."""
    if signal.data.ndim != 2 or signal.shape[0] != 1:
        raise ShapeError(f"conv1d: signal must be (1, T), got {signal.shape}")
    if kernels.data.ndim != 2:
        raise ShapeError(f"conv1d: kernels must be (N, W), got {kernels.shape}")
    if stride < 1:
        raise ShapeError(f"conv1d: stride must be >= 1, got {stride}")
    t_len = signal.shape[1]
    width = kernels.shape[1]
    if t_len < width:
        raise ShapeError(f"conv1d: input too short, T={t_len} < window W={width}")
    frames = (t_len - width) // stride + 1
    win = _windows(signal.data[0], width, stride, frames)
    kd = kernels.data

    def backward_fn(g):
        if _needs(signal):
            gs = np.zeros_like(signal.data)
            row = gs[0]
            for w in range(width):
                row[w : w + frames * stride : stride] += kd[:, w] @ g
        else:
            gs = None
        gk = g @ win if _needs(kernels) else None
        return gs, gk

    return apply_op("conv1d", (signal, kernels), lambda: kd @ win.T, backward_fn)


def transposed_conv1d(frames, kernels, stride):
    """frames (N, L), kernels (N, W), stride >= 1 -> (1, T), T = (L-1)*stride + W.

    Adjoint of conv1d: <conv1d(x, k), y> == <x, transposed_conv1d(y, k)>.
    """
    if frames.data.ndim != 2:
        raise ShapeError(f"transposed_conv1d: frames must be (N, L), got {frames.shape}")
    if kernels.data.ndim != 2 or kernels.shape[0] != frames.shape[0]:
        raise ShapeError(
            f"transposed_conv1d: kernels {kernels.shape} do not match frames {frames.shape}"
        )
    if stride < 1:
        raise ShapeError(f"transposed_conv1d: stride must be >= 1, got {stride}")
    n_frames = frames.shape[1]
    width = kernels.shape[1]
    t_len = (n_frames - 1) * stride + width
    fd, kd = frames.data, kernels.data

    def forward_fn():
        out = np.zeros((1, t_len), dtype=fd.dtype)
        row = out[0]
        for w in range(width):
            row[w : w + n_frames * stride : stride] += kd[:, w] @ fd
        return out

    def backward_fn(g):
        win = _windows(g[0], width, stride, n_frames)
        gf = kd @ win.T if _needs(frames) else None
        gk = fd @ win if _needs(kernels) else None
        return gf, gk

    return apply_op("transposed_conv1d", (frames, kernels), forward_fn, backward_fn)
