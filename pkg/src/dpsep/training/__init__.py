"""SI-SNR/uPIT objectives, Adam with clipping, LR schedule, and the epoch loop."""

from .loop import (
    BEST_FILENAME,
    LAST_FILENAME,
    METRICS_FILENAME,
    EpochStats,
    TrainingAbort,
    TrainResult,
    train_loop,
    validate_si_snri,
)
from .loss import (
    PermutationResult,
    mixture_si_snr,
    plain_snr,
    si_snr,
    si_snr_value,
    upit_loss,
    upit_si_snri,
)
from .optim import Adam, TrainConfig, clip_grad_norm, lr_at

__all__ = [
    "Adam",
    "BEST_FILENAME",
    "EpochStats",
    "LAST_FILENAME",
    "METRICS_FILENAME",
    "PermutationResult",
    "TrainConfig",
    "TrainingAbort",
    "TrainResult",
    "clip_grad_norm",
    "lr_at",
    "mixture_si_snr",
    "plain_snr",
    "si_snr",
    "si_snr_value",
    "train_loop",
    "upit_loss",
    "upit_si_snri",
    "validate_si_snri",
]
