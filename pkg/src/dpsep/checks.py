"""Finite-difference verification suite covering every differentiable stage.

Each case rebuilds a small float64 graph and compares tape gradients against
central differences. Shared by the `gradcheck` command and the acceptance
tests.
"""

from __future__ import annotations

import numpy as np

from . import dualpath as dp
from . import numerics as nt
from . import tasnet
from .numerics import Tensor, finite_diff_check
from .training.loss import si_snr, upit_loss

F64 = np.float64


def _t(rng, shape, scale=1.0):
    return Tensor(rng.standard_normal(shape) * scale, dtype=F64, requires_grad=True)


def _sub_params(rng, feat, hidden):
    return dp.init_sub_params(rng, feat, hidden, dtype=F64)


def _case_conv1d(rng):
    x = _t(rng, (1, 12))
    k = _t(rng, (3, 4))

    def f(xv, kv):
        return nt.tsum(nt.tanh(nt.conv1d(xv, kv, stride=2)))

    return finite_diff_check(f, [x, k])


def _case_transposed_conv1d(rng):
    frames = _t(rng, (3, 5))
    k = _t(rng, (3, 4))

    def f(fv, kv):
        return nt.tsum(nt.tanh(nt.transposed_conv1d(fv, kv, stride=2)))

    return finite_diff_check(f, [frames, k])


def _case_lstm_step(rng):
    params = nt.init_lstm_params(rng, 3, 4, dtype=F64)
    x = _t(rng, (3,))
    h = _t(rng, (4,))
    c = _t(rng, (4,))
    tensors = [x, h, c] + [t for _, t in params.tensors()]

    def f(xv, hv, cv, *_):
        h2, c2 = nt.lstm_step(xv, hv, cv, params)
        return nt.add(nt.tsum(nt.mul(h2, h2)), nt.tsum(nt.tanh(c2)))

    return finite_diff_check(f, tensors)


def _case_bilstm(rng):
    fwd = nt.init_lstm_params(rng, 3, 4, dtype=F64)
    bwd = nt.init_lstm_params(rng, 3, 4, dtype=F64)
    seq = _t(rng, (3, 5))
    tensors = [seq] + [t for _, t in fwd.tensors()] + [t for _, t in bwd.tensors()]

    def f(sv, *_):
        return nt.tsum(nt.tanh(nt.bilstm(sv, fwd, bwd)))

    return finite_diff_check(f, tensors, max_elements=24)


def _case_global_layer_norm(rng):
    x = _t(rng, (3, 4, 2))
    z = _t(rng, (3,))
    r = _t(rng, (3,))

    def f(xv, zv, rv):
        return nt.tsum(nt.tanh(dp.global_layer_norm(xv, zv, rv)))

    return finite_diff_check(f, [x, z, r])


def _intra_inter_case(rng, pass_fn):
    params = _sub_params(rng, 4, 3)
    x = _t(rng, (4, 6, 5))
    tensors = [x] + [t for _, t in params.tensors()]

    def f(xv, *_):
        return nt.tsum(nt.tanh(pass_fn(xv, params)))

    return finite_diff_check(f, tensors, max_elements=16)


def _case_segment_overlap(rng):
    x = _t(rng, (3, 10))

    def f(xv):
        chunks = dp.segment(xv, 4, 2)
        y = nt.tanh(chunks.data)
        return nt.tsum(nt.tanh(dp.overlap_add(chunks.with_data(y))))

    return finite_diff_check(f, x)


def _case_dprnn_stack(rng):
    # one full block on the N=4, K=6, S=5, H=3 chunk geometry (L=12)
    block = dp.init_block_params(rng, 4, 3, dtype=F64)
    w = _t(rng, (4, 12))
    tensors = [w] + [t for _, t in block.tensors()]

    def f(wv, *_):
        chunks = dp.segment(wv, 6, 3)
        out = dp.dprnn_stack(chunks, [block])
        return nt.tsum(nt.tanh(dp.overlap_add(out)))

    return finite_diff_check(f, tensors, max_elements=10)


def _case_tiny_separator(rng):
    model = tasnet.build_model(
        num_filters=4,
        window=4,
        num_sources=2,
        num_blocks=2,
        hidden=3,
        chunk_len=6,
        sample_rate=8000,
        seed=7,
        dtype=F64,
    )
    mixture = _t(rng, (1, 30), scale=0.5)
    refs = Tensor(rng.standard_normal((2, 30)), dtype=F64)
    tensors = [mixture] + model.parameter_tensors()

    def f(mv, *_):
        est = tasnet.separate(mv, model)
        loss, _ = upit_loss(est, refs)
        return loss

    return finite_diff_check(f, tensors, max_elements=6)


def _case_upit_si_snr(rng):
    est = _t(rng, (2, 16))
    ref = Tensor(rng.standard_normal((2, 16)), dtype=F64)

    def f(ev):
        loss, _ = upit_loss(ev, ref)
        return loss

    return finite_diff_check(f, est)


def _case_si_snr(rng):
    est = _t(rng, (64,))
    ref = Tensor(rng.standard_normal(64), dtype=F64)

    def f(ev):
        return si_snr(ev, ref)

    return finite_diff_check(f, est)


GRADCHECK_CASES = (
    ("conv1d", _case_conv1d),
    ("transposed_conv1d", _case_transposed_conv1d),
    ("lstm_step", _case_lstm_step),
    ("bilstm", _case_bilstm),
    ("global_layer_norm", _case_global_layer_norm),
    ("segment_overlap_add", _case_segment_overlap),
    ("intra_chunk_pass", lambda rng: _intra_inter_case(rng, dp.intra_chunk_pass)),
    ("inter_chunk_pass", lambda rng: _intra_inter_case(rng, dp.inter_chunk_pass)),
    ("dprnn_stack", _case_dprnn_stack),
    ("si_snr", _case_si_snr),
    ("upit_si_snr", _case_upit_si_snr),
    ("tiny_separator", _case_tiny_separator),
)


def run_gradcheck_suite(seed=0):
    """Run all cases; returns list of (name, FiniteDiffReport)."""
    results = []
    for name, case in GRADCHECK_CASES:
        rng = np.random.default_rng(seed)
        results.append((name, case(rng)))
    return results
