"""Epoch loop: seeded shuffling, batched uPIT updates, validation-driven
checkpointing with early stopping, and a tab-separated metrics log."""

from __future__ import annotations

import os
import time
from dataclasses import dataclass, field

import numpy as np

from .. import numerics as nt
from .. import tasnet
from ..numerics import GradTape, NumericsError, Tensor
from .loss import mixture_si_snr, upit_loss
from .optim import Adam, clip_grad_norm, lr_at

METRICS_FILENAME = "metrics.tsv"
BEST_FILENAME = "best.ckpt"
LAST_FILENAME = "last.ckpt"


class TrainingAbort(RuntimeError):
    """Non-finite values during training; carries (epoch, batch, op context)."""

    def __init__(self, epoch, batch, detail):
        super().__init__(f"training aborted at epoch {epoch}, batch {batch}: {detail}")
        self.epoch = epoch
        self.batch = batch
        self.detail = detail


@dataclass
class EpochStats:
    epoch: int
    lr: float
    train_loss: float
    val_si_snri: float
    seconds: float


@dataclass
class TrainResult:
    best_epoch: int
    best_val_si_snri: float
    epochs_run: int
    steps_run: int
    run_dir: str
    history: list = field(default_factory=list)


def _example_loss(model, example):
    mixture = Tensor(example.mixture)
    est = tasnet.separate(mixture, model)
    refs = Tensor(example.sources)
    if example.valid_len < est.shape[1]:
        est = nt.slice_axis(est, 1, 0, example.valid_len)
        refs = nt.slice_axis(refs, 1, 0, example.valid_len)
    loss, result = upit_loss(est, refs)
    return loss, result


def validate_si_snri(model, examples):
    """Mean uPIT SI-SNRi over a dataset, computed without gradient tracking."""
    scores = []
    for ex in examples:
        est = tasnet.separate(Tensor(ex.mixture), model)
        est_np = est.data[:, : ex.valid_len]
        refs_np = ex.sources[:, : ex.valid_len]
        mix_np = ex.mixture[:, : ex.valid_len]
        _, result = upit_loss(Tensor(est_np), Tensor(refs_np))
        scores.append(result.mean_db - mixture_si_snr(mix_np, refs_np))
    return float(np.mean(scores))


def train_loop(model, train_set, valid_set, config, run_dir, deterministic=True):
    """Train `model` on MixtureExamples per the configured recipe.

    Per epoch: seeded shuffle, then per batch zero grads -> forward -> mean
    uPIT loss -> backward -> clip -> Adam. Keeps the checkpoint with the best
    validation SI-SNRi; stops early once `config.patience` consecutive epochs
    bring no improvement. Appends one metrics line per epoch.
    """
    if not train_set or not valid_set:
        raise ValueError("train_loop: train and validation sets must be non-empty")
    os.makedirs(run_dir, exist_ok=True)
    metrics_path = os.path.join(run_dir, METRICS_FILENAME)
    params = model.parameter_tensors()
    optimizer = Adam(params, beta1=config.beta1, beta2=config.beta2, eps=config.adam_eps)
    nt.set_nan_checks(config.nan_checks)

    best_epoch = 0
    best_val = -np.inf
    since_best = 0
    steps = 0
    history = []
    try:
        with open(metrics_path, "w") as log:
            for epoch in range(1, config.epochs + 1):
                started = time.perf_counter()
                lr = lr_at(epoch - 1, config)
                rng = np.random.default_rng((config.seed, epoch))
                order = rng.permutation(len(train_set))
                batch_losses = []
                for batch_idx in range(0, len(order), config.batch_size):
                    batch = [train_set[i] for i in order[batch_idx : batch_idx + config.batch_size]]
                    optimizer.zero_grads()
                    try:
                        with GradTape() as tape:
                            losses = [_example_loss(model, ex)[0] for ex in batch]
                            total = losses[0]
                            for term in losses[1:]:
                                total = nt.add(total, term)
                            batch_loss = nt.mul(total, 1.0 / len(losses))
                        value = float(batch_loss.data)
                        if not np.isfinite(value):
                            raise NumericsError("non-finite batch loss")
                        tape.backward(batch_loss)
                    except NumericsError as err:
                        raise TrainingAbort(epoch, batch_idx // config.batch_size, str(err))
                    clip_grad_norm(params, config.clip_norm)
                    optimizer.step(lr)
                    steps += 1
                    batch_losses.append(value)

                val_si_snri = validate_si_snri(model, valid_set)
                tasnet.save_model(model, os.path.join(run_dir, LAST_FILENAME))
                if val_si_snri > best_val:
                    best_val = val_si_snri
                    best_epoch = epoch
                    since_best = 0
                    tasnet.save_model(model, os.path.join(run_dir, BEST_FILENAME))
                else:
                    since_best += 1

                seconds = 0.0 if deterministic else time.perf_counter() - started
                stats = EpochStats(
                    epoch, lr, float(np.mean(batch_losses)), val_si_snri, seconds
                )
                history.append(stats)
                log.write(
                    f"{stats.epoch}\t{stats.lr:.6e}\t{stats.train_loss:.6f}"
                    f"\t{stats.val_si_snri:.6f}\t{stats.seconds:.3f}\n"
                )
                log.flush()
                if since_best >= config.patience:
                    break
    finally:
        nt.set_nan_checks(False)

    return TrainResult(
        best_epoch=best_epoch,
        best_val_si_snri=float(best_val),
        epochs_run=len(history),
        steps_run=steps,
        run_dir=run_dir,
        history=history,
    )
