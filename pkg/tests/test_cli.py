"""CLI surface: config parsing, exit codes, train/separate/evaluate round trip."""

import os

import numpy as np
import pytest

from dpsep import cli
from dpsep.cli import ConfigError, RunConfig, parse_config

MANIFEST = (
    "train\tsynth:harmonic:1\tsynth:chirp:2\t0.0\n"
    "train\tsynth:modulated-noise:3\tsynth:harmonic:4\t2.0\n"
    "valid\tsynth:chirp:5\tsynth:modulated-noise:6\t-2.0\n"
    "test\tsynth:harmonic:7\tsynth:chirp:8\t1.0\n"
)

TOY_CONFIG = """
# toy run
num_filters=4
window=8
num_sources=2
num_blocks=1
hidden=4
chunk_len=10
epochs=2
segment_seconds=0.1
batch_size=2
patience=10
seed=3
manifest={manifest}
run_dir={run_dir}
"""


def _write_toy(tmp_path):
    manifest = tmp_path / "m.tsv"
    manifest.write_text(MANIFEST)
    config = tmp_path / "toy.cfg"
    run_dir = tmp_path / "run"
    config.write_text(TOY_CONFIG.format(manifest=manifest, run_dir=run_dir))
    return config, manifest, run_dir


class TestConfig:
    def test_defaults_match_published_recipe(self):
        config = RunConfig()
        assert config.num_filters == 64
        assert config.window == 2
        assert config.num_blocks == 6
        assert config.hidden == 128
        assert config.lr_init == pytest.approx(1e-3)
        assert config.lr_decay == pytest.approx(0.98)
        assert config.lr_decay_every == 2
        assert config.clip_norm == pytest.approx(5.0)
        assert config.patience == 10
        assert config.segment_seconds == pytest.approx(4.0)
        assert config.epochs == 100

    def test_parse_with_comments_and_types(self, tmp_path):
        path = tmp_path / "c.cfg"
        path.write_text("window=4  # samples\n\ndeterministic=false\nlr_init=2e-3\n")
        config = parse_config(path)
        assert config.window == 4
        assert config.deterministic is False
        assert config.lr_init == pytest.approx(2e-3)

    def test_unknown_key_is_hard_error(self, tmp_path):
        path = tmp_path / "c.cfg"
        path.write_text("wndow=4\n")
        with pytest.raises(ConfigError) as exc:
            parse_config(path)
        assert "wndow" in str(exc.value)

    def test_duplicate_key_rejected(self, tmp_path):
        path = tmp_path / "c.cfg"
        path.write_text("window=4\nwindow=8\n")
        with pytest.raises(ConfigError):
            parse_config(path)

    def test_missing_file_reported(self, tmp_path):
        with pytest.raises(ConfigError) as exc:
            parse_config(tmp_path / "nope.cfg")
        assert "nope.cfg" in str(exc.value)


class TestTrainCommand:
    def test_missing_config_exits_2(self, tmp_path, capsys):
        code = cli.main(["train", str(tmp_path / "absent.cfg")])
        assert code == 2
        assert "absent.cfg" in capsys.readouterr().err

    def test_bad_key_exits_2(self, tmp_path, capsys):
        path = tmp_path / "c.cfg"
        path.write_text("nonsense=1\n")
        assert cli.main(["train", str(path)]) == 2

    def test_toy_train_writes_best_checkpoint(self, tmp_path):
        config, _, run_dir = _write_toy(tmp_path)
        assert cli.main(["train", str(config)]) == 0
        assert (run_dir / "best.ckpt").exists()
        assert (run_dir / "last.ckpt").exists()
        assert (run_dir / "metrics.tsv").exists()

    def test_rerun_reproduces_metrics_byte_identically(self, tmp_path):
        config, _, run_dir = _write_toy(tmp_path)
        assert cli.main(["train", str(config)]) == 0
        first = (run_dir / "metrics.tsv").read_bytes()
        assert cli.main(["train", str(config)]) == 0
        assert (run_dir / "metrics.tsv").read_bytes() == first

    def test_run_dir_env_override(self, tmp_path, monkeypatch):
        config, _, _ = _write_toy(tmp_path)
        override = tmp_path / "elsewhere"
        monkeypatch.setenv(cli.RUN_DIR_ENV, str(override))
        assert cli.main(["train", str(config)]) == 0
        assert (override / "best.ckpt").exists()


class TestSeparateCommand:
    @pytest.fixture
    def trained(self, tmp_path):
        config, manifest, run_dir = _write_toy(tmp_path)
        assert cli.main(["train", str(config)]) == 0
        return run_dir / "best.ckpt", manifest

    def test_writes_one_file_per_source_with_input_length(self, trained, tmp_path):
        ckpt, _ = trained
        from dpsep.data import read_wav, synth_source, write_wav

        wav_in = tmp_path / "mix.wav"
        mix = 0.5 * synth_source("harmonic", 0.2, 8000, seed=9)
        write_wav(wav_in, mix[0], 8000)
        out_dir = tmp_path / "sep"
        assert cli.main(["separate", str(ckpt), str(wav_in), str(out_dir)]) == 0
        files = sorted(os.listdir(out_dir))
        assert files == ["source1.wav", "source2.wav"]
        for name in files:
            audio, rate = read_wav(out_dir / name)
            assert rate == 8000
            assert audio.shape[1] == mix.shape[1]

    def test_rate_mismatch_exits_2(self, trained, tmp_path, capsys):
        ckpt, _ = trained
        from dpsep.data import synth_source, write_wav

        wav_in = tmp_path / "mix16k.wav"
        write_wav(wav_in, 0.3 * synth_source("chirp", 0.1, 16000, seed=4)[0], 16000)
        assert cli.main(["separate", str(ckpt), str(wav_in), str(tmp_path / "o")]) == 2
        assert "sample rate" in capsys.readouterr().err

    def test_missing_checkpoint_exits_2(self, tmp_path):
        assert cli.main(["separate", str(tmp_path / "no.ckpt"), "x.wav", "o"]) == 2


class TestEvaluateCommand:
    def test_reports_per_example_and_mean(self, tmp_path, capsys):
        config, manifest, run_dir = _write_toy(tmp_path)
        assert cli.main(["train", str(config)]) == 0
        code = cli.main(["evaluate", str(run_dir / "best.ckpt"), str(manifest)])
        out = capsys.readouterr().out
        assert code == 0
        assert "example 0:" in out
        assert "mean si_snri=" in out
        assert "mean snri=" in out

    def test_manifest_without_test_split_exits_2(self, tmp_path, capsys):
        config, _, run_dir = _write_toy(tmp_path)
        assert cli.main(["train", str(config)]) == 0
        other = tmp_path / "train_only.tsv"
        other.write_text("train\tsynth:harmonic:1\tsynth:chirp:2\t0.0\n")
        assert cli.main(["evaluate", str(run_dir / "best.ckpt"), str(other)]) == 2


def test_gradcheck_command_passes(capsys):
    assert cli.main(["gradcheck"]) == 0
    out = capsys.readouterr().out
    assert "tiny_separator: pass" in out
    assert "12/12" in out
