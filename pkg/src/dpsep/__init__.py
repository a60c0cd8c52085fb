"""Self-contained time-domain source separation: a dual-path recurrent
separator inside an encoder/masker/decoder, with its own reverse-mode
differentiation core, uPIT/SI-SNR training, and a synthetic-mixture harness."""

__version__ = "0.1.0"
