"""Dataset assembly: resolve manifest records, mix, and cut fixed segments.

Synthetic sources are generated at exactly the segment length; WAV sources
use their file length and are chopped into segments, zero-padding the final
partial one (its real extent is kept in `valid_len`).
"""

from __future__ import annotations

import numpy as np

from .manifest import ManifestError
from .mixing import mix_at_snr
from .synth import synth_source
from .wavio import WavFormatError, read_wav


def _resolve_source(spec, segment_seconds, sample_rate, context):
    if spec.kind == "synth":
        return synth_source(spec.synth_kind, segment_seconds, sample_rate, spec.seed)
    try:
        samples, rate = read_wav(spec.path)
    except (OSError, WavFormatError) as err:
        raise ManifestError(f"{context}: cannot load {spec.path!r}: {err}") from None
    if rate != sample_rate:
        raise ManifestError(
            f"{context}: {spec.path!r} has sample rate {rate}, expected {sample_rate}"
        )
    return samples


def _sub_seed(seed, index):
    # Stable per-record derivation so parallel and serial generation agree.
    return int(np.random.SeedSequence(entropy=seed, spawn_key=(index,)).entropy % (2**31))


def make_dataset(records, segment_seconds, sample_rate, seed):
    """Turn manifest records into fixed-length MixtureExamples, deterministically."""
    seg_len = int(round(segment_seconds * sample_rate))
    if seg_len < 1:
        raise ValueError(f"segment of {segment_seconds}s at {sample_rate}Hz is empty")
    examples = []
    for index, rec in enumerate(records):
        context = f"manifest line {rec.line_no}"
        s1 = _resolve_source(rec.spec1, segment_seconds, sample_rate, context)
        s2 = _resolve_source(rec.spec2, segment_seconds, sample_rate, context)
        length = min(s1.shape[1], s2.shape[1])
        full = mix_at_snr(
            s1[:, :length],
            s2[:, :length],
            rec.snr_db,
            sample_rate=sample_rate,
            seed=_sub_seed(seed, index),
        )
        n_segments = -(-length // seg_len)
        for i in range(n_segments):
            start = i * seg_len
            stop = min(start + seg_len, length)
            mixture = np.zeros((1, seg_len), dtype=np.float32)
            sources = np.zeros((full.sources.shape[0], seg_len), dtype=np.float32)
            mixture[:, : stop - start] = full.mixture[:, start:stop]
            sources[:, : stop - start] = full.sources[:, start:stop]
            examples.append(
                full.__class__(
                    mixture=mixture,
                    sources=sources,
                    sample_rate=sample_rate,
                    snr_db=rec.snr_db,
                    seed=full.seed,
                    valid_len=stop - start,
                )
            )
    return examples
