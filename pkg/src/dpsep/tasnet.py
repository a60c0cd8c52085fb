"""Encoder/masker/decoder assembly operating directly on waveform samples.

A learned conv front-end encodes the mixture, the dual-path stack estimates
one nonnegative mask per source over the encoded representation, and a
transposed-conv decoder maps each masked representation back to a waveform.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import dualpath as dp
from . import numerics as nt
from .numerics import ShapeError, Tensor


@dataclass
class MaskSet:
    """C nonnegative masks over the encoded representation, shape (C, N, L)."""

    masks: Tensor

    @property
    def num_sources(self):
        return self.masks.shape[0]


@dataclass
class SeparatorModel:
    num_filters: int
    window: int
    stride: int
    num_sources: int
    num_blocks: int
    hidden: int
    chunk_len: int
    sample_rate: int
    encoder_kernels: Tensor  # (N, W)
    decoder_kernels: Tensor  # (N, W)
    mask_weight: Tensor  # (C*N, N)
    mask_bias: Tensor  # (C*N,)
    blocks: list = field(default_factory=list)

    def __post_init__(self):
        n, w, c = self.num_filters, self.window, self.num_sources
        if self.stride != max(w // 2, 1):
            raise ShapeError(f"stride must be max(W/2, 1) = {max(w // 2, 1)}, got {self.stride}")
        if self.encoder_kernels.shape != (n, w) or self.decoder_kernels.shape != (n, w):
            raise ShapeError(
                f"encoder/decoder kernels must be ({n},{w}), got "
                f"{self.encoder_kernels.shape}/{self.decoder_kernels.shape}"
            )
        if self.mask_weight.shape != (c * n, n) or self.mask_bias.shape != (c * n,):
            raise ShapeError(
                f"mask head must map {n} -> {c * n}, got weight {self.mask_weight.shape} "
                f"bias {self.mask_bias.shape}"
            )
        if len(self.blocks) != self.num_blocks:
            raise ShapeError(f"expected {self.num_blocks} blocks, got {len(self.blocks)}")

    def parameters(self):
        """(name, tensor) pairs in the fixed checkpoint order."""
        yield "encoder.kernels", self.encoder_kernels
        yield "decoder.kernels", self.decoder_kernels
        yield "mask_head.weight", self.mask_weight
        yield "mask_head.bias", self.mask_bias
        for b, block in enumerate(self.blocks):
            for name, t in block.tensors():
                yield f"block{b}.{name}", t

    def parameter_tensors(self):
        return [t for _, t in self.parameters()]


def parameter_count(model):
    """Exact number of scalars across all parameter tensors."""
    return sum(t.size for _, t in model.parameters())


def frame_count(num_samples, window, stride):
    if num_samples < window:
        raise ShapeError(f"input too short: {num_samples} samples < window {window}")
    return (num_samples - window) // stride + 1


def build_model(
    num_filters=64,
    window=2,
    num_sources=2,
    num_blocks=6,
    hidden=128,
    chunk_len=None,
    nominal_samples=32000,
    sample_rate=8000,
    seed=0,
    dtype=np.float32,
):
    """Construct a randomly initialized model.

    When `chunk_len` is None it is derived from the encoder frame count of a
    nominal input (training segments of `nominal_samples` samples).
    """
    stride = max(window // 2, 1)
    if chunk_len is None:
        frames = frame_count(nominal_samples, window, stride)
        chunk_len, _ = dp.choose_chunk_size(frames)
    if chunk_len % 2 != 0:
        raise ShapeError(f"chunk_len must be even, got {chunk_len}")
    rng = np.random.default_rng(seed)
    kb = 1.0 / np.sqrt(window)
    mb = 1.0 / np.sqrt(num_filters)

    def uni(shape, bound):
        return Tensor(rng.uniform(-bound, bound, size=shape), dtype=dtype, requires_grad=True)

    return SeparatorModel(
        num_filters=num_filters,
        window=window,
        stride=stride,
        num_sources=num_sources,
        num_blocks=num_blocks,
        hidden=hidden,
        chunk_len=chunk_len,
        sample_rate=sample_rate,
        encoder_kernels=uni((num_filters, window), kb),
        decoder_kernels=uni((num_filters, window), kb),
        mask_weight=uni((num_sources * num_filters, num_filters), mb),
        mask_bias=Tensor(
            np.zeros(num_sources * num_filters), dtype=dtype, requires_grad=True
        ),
        blocks=[
            dp.init_block_params(rng, num_filters, hidden, dtype=dtype)
            for _ in range(num_blocks)
        ],
    )


def encode(mixture, model):
    """mixture (1, T) -> nonnegative representation (N, L)."""
    return nt.relu(nt.conv1d(mixture, model.encoder_kernels, model.stride))


def estimate_masks(rep, model):
    """rep (N, L) -> MaskSet of C nonnegative (N, L) masks.

    Pipeline: segment -> dual-path stack -> per-position affine N -> C*N ->
    overlap-add each feature map -> relu -> reshape to (C, N, L).
    """
    n, length = rep.shape
    chunks = dp.segment(rep, model.chunk_len, model.chunk_len // 2)
    processed = dp.dprnn_stack(chunks, model.blocks)
    x = nt.transpose(processed.data, (1, 2, 0))  # (K, S, N)
    x = nt.affine(x, model.mask_weight, model.mask_bias)  # (K, S, C*N)
    x = nt.transpose(x, (2, 0, 1))  # (C*N, K, S)
    maps = dp.overlap_add(processed.with_data(x))  # (C*N, L)
    masks = nt.reshape(nt.relu(maps), (model.num_sources, n, length))
    return MaskSet(masks=masks)


def apply_masks(rep, mask_set):
    """out[c] = rep (*) masks[c]; shapes (N, L) x (C, N, L) -> (C, N, L)."""
    masks = mask_set.masks
    if masks.shape[1:] != rep.shape:
        raise ShapeError(f"masks {masks.shape} do not match representation {rep.shape}")
    per_source = [
        nt.mul(rep, nt.index_axis0(masks, c)) for c in range(masks.shape[0])
    ]
    return nt.stack(per_source, axis=0)


def decode(masked, model):
    """masked (C, N, L) -> waveforms (C, T'), T' = (L-1)*stride + W."""
    waves = [
        nt.transposed_conv1d(
            nt.index_axis0(masked, c), model.decoder_kernels, model.stride
        )
        for c in range(masked.shape[0])
    ]
    return nt.concat(waves, axis=0)


def separate(mixture, model):
    """Full pipeline: mixture (1, T) -> C estimated sources (C, T)."""
    t_len = mixture.shape[1]
    rep = encode(mixture, model)
    masks = estimate_masks(rep, model)
    est = decode(apply_masks(rep, masks), model)
    if est.shape[1] < t_len:
        est = nt.pad_last_axis(est, t_len)
    elif est.shape[1] > t_len:
        est = nt.slice_axis(est, 1, 0, t_len)
    return est


def save_model(model, path, extra_meta=None):
    meta = {
        "format": "dpsep-separator",
        "num_filters": model.num_filters,
        "window": model.window,
        "stride": model.stride,
        "num_sources": model.num_sources,
        "num_blocks": model.num_blocks,
        "hidden": model.hidden,
        "chunk_len": model.chunk_len,
        "sample_rate": model.sample_rate,
        "dtype": model.encoder_kernels.data.dtype.name,
    }
    meta.update(extra_meta or {})
    nt.save_arrays(path, ((name, t.data) for name, t in model.parameters()), meta=meta)


def load_model(path):
    meta, arrays = nt.load_arrays(path)
    if meta.get("format") != "dpsep-separator":
        raise nt.CheckpointError(f"{path} is not a separator checkpoint")
    dtype = np.dtype(meta.get("dtype", "float32"))
    model = build_model(
        num_filters=int(meta["num_filters"]),
        window=int(meta["window"]),
        num_sources=int(meta["num_sources"]),
        num_blocks=int(meta["num_blocks"]),
        hidden=int(meta["hidden"]),
        chunk_len=int(meta["chunk_len"]),
        sample_rate=int(meta["sample_rate"]),
        dtype=dtype,
    )
    for name, t in model.parameters():
        if name not in arrays:
            raise nt.CheckpointError(f"checkpoint missing tensor {name!r}")
        arr = arrays[name].astype(dtype)
        if arr.shape != t.shape:
            raise nt.CheckpointError(
                f"checkpoint tensor {name!r} has shape {arr.shape}, expected {t.shape}"
            )
        t.data = arr
    return model, meta
