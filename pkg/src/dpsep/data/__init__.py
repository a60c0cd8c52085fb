"""WAV I/O, synthetic sources, SNR-controlled mixing, manifests, datasets."""

from .dataset import make_dataset
from .manifest import (
    ManifestError,
    ManifestRecord,
    SourceSpec,
    SPLITS,
    parse_manifest,
    split_records,
)
from .mixing import MixingError, MixtureExample, mix_at_snr
from .synth import SOURCE_KINDS, synth_source
from .wavio import WavFormatError, read_wav, write_wav

__all__ = [
    "ManifestError",
    "ManifestRecord",
    "MixingError",
    "MixtureExample",
    "SOURCE_KINDS",
    "SPLITS",
    "SourceSpec",
    "WavFormatError",
    "make_dataset",
    "mix_at_snr",
    "parse_manifest",
    "read_wav",
    "split_records",
    "synth_source",
    "write_wav",
]
