"""Command-line surface: train, separate, evaluate, gradcheck.

Config files are flat `key=value` text with `#` comments; unknown keys are a
hard error. Exit codes: 0 success, 2 usage/config/format problems, 3 numeric
aborts. The `DPSEP_RUN_DIR` environment variable overrides the run directory.
numpy-dependent modules are imported only after the thread count is exported
to the BLAS environment, so `threads=1` gives bit-reproducible runs.
"""

from __future__ import annotations

import argparse
import os
import sys
from dataclasses import dataclass, fields

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERIC = 3

RUN_DIR_ENV = "DPSEP_RUN_DIR"


class ConfigError(ValueError):
    """Raised for unreadable, unparseable, or out-of-contract configs."""


@dataclass
class RunConfig:
    """All run settings; defaults follow the published recipe where stated."""

    # model
    num_filters: int = 64
    window: int = 2
    num_sources: int = 2
    num_blocks: int = 6
    hidden: int = 128
    chunk_len: int = 0  # 0 = derive from the sqrt(2L) rule
    # training
    epochs: int = 100
    segment_seconds: float = 4.0
    lr_init: float = 1e-3
    lr_decay: float = 0.98
    lr_decay_every: int = 2
    clip_norm: float = 5.0
    patience: int = 10
    beta1: float = 0.9
    beta2: float = 0.999
    adam_eps: float = 1e-8
    batch_size: int = 2
    seed: int = 0
    # data / run
    sample_rate: int = 8000
    manifest: str = ""
    run_dir: str = "runs/default"
    deterministic: bool = True
    threads: int = 1
    nan_checks: bool = True


def _parse_value(name, kind, text, context):
    if kind is bool:
        lowered = text.lower()
        if lowered in ("true", "1", "yes"):
            return True
        if lowered in ("false", "0", "no"):
            return False
        raise ConfigError(f"{context}: boolean key {name} got {text!r}")
    try:
        return kind(text)
    except ValueError:
        raise ConfigError(f"{context}: key {name} expects {kind.__name__}, got {text!r}") from None


def parse_config(path):
    """Read a flat key=value config file into a RunConfig."""
    if not os.path.exists(path):
        raise ConfigError(f"config file not found: {path}")
    types = {f.name: type(f.default) for f in fields(RunConfig)}
    values = {}
    with open(path, "r", encoding="utf-8") as fh:
        for line_no, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            context = f"{path}:{line_no}"
            key, sep, text = line.partition("=")
            key = key.strip()
            text = text.strip()
            if not sep or not key:
                raise ConfigError(f"{context}: expected key=value, got {raw.strip()!r}")
            if key not in types:
                raise ConfigError(f"{context}: unknown config key {key!r}")
            if key in values:
                raise ConfigError(f"{context}: duplicate config key {key!r}")
            values[key] = _parse_value(key, types[key], text, context)
    config = RunConfig(**values)
    if config.threads < 1:
        raise ConfigError(f"{path}: threads must be >= 1, got {config.threads}")
    if config.window < 1 or config.num_sources < 1 or config.num_filters < 1:
        raise ConfigError(f"{path}: model dimensions must be positive")
    return config


def _export_threads(threads):
    for var in ("OPENBLAS_NUM_THREADS", "OMP_NUM_THREADS", "MKL_NUM_THREADS"):
        os.environ[var] = str(threads)


def _resolve_run_dir(config_value):
    return os.environ.get(RUN_DIR_ENV) or config_value


def cmd_train(config_path):
    try:
        config = parse_config(config_path)
    except ConfigError as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_CONFIG
    _export_threads(config.threads)

    from . import data, tasnet
    from .training import TrainConfig, TrainingAbort, train_loop

    if not config.manifest:
        print("error: config key 'manifest' is required for training", file=sys.stderr)
        return EXIT_CONFIG
    try:
        records = data.parse_manifest(config.manifest)
        train_set = data.make_dataset(
            data.split_records(records, "train"),
            config.segment_seconds,
            config.sample_rate,
            config.seed,
        )
        valid_set = data.make_dataset(
            data.split_records(records, "valid"),
            config.segment_seconds,
            config.sample_rate,
            config.seed,
        )
    except (data.ManifestError, data.MixingError, ValueError) as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_CONFIG
    if not train_set or not valid_set:
        print("error: manifest must provide non-empty train and valid splits", file=sys.stderr)
        return EXIT_CONFIG

    model = tasnet.build_model(
        num_filters=config.num_filters,
        window=config.window,
        num_sources=config.num_sources,
        num_blocks=config.num_blocks,
        hidden=config.hidden,
        chunk_len=config.chunk_len or None,
        nominal_samples=int(round(config.segment_seconds * config.sample_rate)),
        sample_rate=config.sample_rate,
        seed=config.seed,
    )
    train_config = TrainConfig(
        epochs=config.epochs,
        segment_seconds=config.segment_seconds,
        lr_init=config.lr_init,
        lr_decay=config.lr_decay,
        lr_decay_every=config.lr_decay_every,
        clip_norm=config.clip_norm,
        patience=config.patience,
        beta1=config.beta1,
        beta2=config.beta2,
        adam_eps=config.adam_eps,
        batch_size=config.batch_size,
        seed=config.seed,
        nan_checks=config.nan_checks,
    )
    run_dir = _resolve_run_dir(config.run_dir)
    try:
        result = train_loop(
            model, train_set, valid_set, train_config, run_dir,
            deterministic=config.deterministic,
        )
    except TrainingAbort as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_NUMERIC
    print(
        f"finished {result.epochs_run} epochs ({result.steps_run} steps); "
        f"best validation SI-SNRi {result.best_val_si_snri:.3f} dB at epoch "
        f"{result.best_epoch}; run dir {result.run_dir}"
    )
    return EXIT_OK


def cmd_separate(ckpt_path, wav_path, out_dir):
    from . import data, tasnet
    from .numerics import CheckpointError, Tensor

    try:
        model, _ = tasnet.load_model(ckpt_path)
    except (OSError, CheckpointError) as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        samples, rate = data.read_wav(wav_path)
    except (OSError, data.WavFormatError) as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_CONFIG
    if rate != model.sample_rate:
        print(
            f"error: {wav_path} sample rate {rate} does not match checkpoint "
            f"sample rate {model.sample_rate}",
            file=sys.stderr,
        )
        return EXIT_CONFIG
    est = tasnet.separate(Tensor(samples), model)
    os.makedirs(out_dir, exist_ok=True)
    for c in range(model.num_sources):
        out_path = os.path.join(out_dir, f"source{c + 1}.wav")
        data.write_wav(out_path, est.data[c], rate)
        print(out_path)
    return EXIT_OK


EVAL_SEGMENT_SECONDS = 4.0


def cmd_evaluate(ckpt_path, manifest_path):
    from . import data, tasnet
    from .numerics import CheckpointError, Tensor
    from .training import plain_snr, upit_si_snri

    try:
        model, _ = tasnet.load_model(ckpt_path)
        records = data.split_records(data.parse_manifest(manifest_path), "test")
        examples = data.make_dataset(
            records, EVAL_SEGMENT_SECONDS, model.sample_rate, seed=0
        )
    except (OSError, CheckpointError, data.ManifestError) as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_CONFIG
    if not examples:
        print(f"error: manifest {manifest_path} has no test records", file=sys.stderr)
        return EXIT_CONFIG

    si_snri_values = []
    snri_values = []
    for i, ex in enumerate(examples):
        est = tasnet.separate(Tensor(ex.mixture), model).data[:, : ex.valid_len]
        refs = ex.sources[:, : ex.valid_len]
        mix = ex.mixture[:, : ex.valid_len]
        si_snri, result = upit_si_snri(est, refs, mix)
        flat_mix = mix.reshape(-1)
        snri = sum(
            plain_snr(est[a], refs[b]) - plain_snr(flat_mix, refs[b])
            for a, b in enumerate(result.best_perm)
        ) / len(result.best_perm)
        si_snri_values.append(si_snri)
        snri_values.append(snri)
        print(f"example {i}: si_snri={si_snri:.4f} dB snri={snri:.4f} dB")
    mean_si = sum(si_snri_values) / len(si_snri_values)
    mean_snr = sum(snri_values) / len(snri_values)
    print(f"mean si_snri={mean_si:.4f} dB over {len(examples)} examples")
    print(f"mean snri={mean_snr:.4f} dB over {len(examples)} examples")
    return EXIT_OK


def cmd_gradcheck():
    from .checks import run_gradcheck_suite

    results = run_gradcheck_suite()
    failed = 0
    for name, report in results:
        status = "pass" if report.passed else "FAIL"
        print(f"{name}: {status} (max rel error {report.max_rel_error:.3e})")
        if not report.passed:
            failed += 1
    print(f"{len(results) - failed}/{len(results)} gradient checks passed")
    return EXIT_OK if failed == 0 else 1


def main(argv=None):
    parser = argparse.ArgumentParser(
        prog="dpsep",
        description="Time-domain source separation with a dual-path recurrent separator.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    p_train = sub.add_parser("train", help="train a model from a config file")
    p_train.add_argument("config", help="path to key=value config file")
    p_sep = sub.add_parser("separate", help="separate a mixture WAV with a checkpoint")
    p_sep.add_argument("ckpt")
    p_sep.add_argument("wav")
    p_sep.add_argument("outdir")
    p_eval = sub.add_parser("evaluate", help="report SI-SNRi/SNRi over a test manifest")
    p_eval.add_argument("ckpt")
    p_eval.add_argument("manifest")
    sub.add_parser("gradcheck", help="run finite-difference checks over all modules")

    args = parser.parse_args(argv)
    if args.command == "train":
        return cmd_train(args.config)
    if args.command == "separate":
        return cmd_separate(args.ckpt, args.wav, args.outdir)
    if args.command == "evaluate":
        return cmd_evaluate(args.ckpt, args.manifest)
    return cmd_gradcheck()


if __name__ == "__main__":
    sys.exit(main())
