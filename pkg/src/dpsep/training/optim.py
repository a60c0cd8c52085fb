"""Adam with global-norm gradient clipping and the stepped LR decay schedule."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass
class TrainConfig:
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
    nan_checks: bool = True

    def __post_init__(self):
        for name in (
            "epochs", "segment_seconds", "lr_init", "lr_decay", "lr_decay_every",
            "clip_norm", "beta1", "beta2", "adam_eps", "batch_size",
        ):
            if getattr(self, name) <= 0:
                raise ValueError(f"TrainConfig.{name} must be positive")
        if self.patience < 1:
            raise ValueError("TrainConfig.patience must be >= 1")


def lr_at(epoch, config):
    """Learning rate for a 0-based epoch: lr_init * decay^(epoch // every)."""
    if epoch < 0:
        raise ValueError(f"epoch must be >= 0, got {epoch}")
    return config.lr_init * config.lr_decay ** (epoch // config.lr_decay_every)


def clip_grad_norm(params, max_norm):
    """Rescale all gradients so their global L2 norm is at most max_norm.

    Returns the applied scale (1.0 when no clipping happened).
    """
    total = 0.0
    grads = [p.grad for p in params if p.grad is not None]
    for g in grads:
        total += float((g.astype(np.float64) ** 2).sum())
    global_norm = np.sqrt(total)
    if global_norm <= max_norm or global_norm == 0.0:
        return 1.0
    scale = max_norm / global_norm
    for g in grads:
        g *= g.dtype.type(scale)
    return scale


class Adam:
    """Standard bias-corrected first/second-moment optimizer."""

    def __init__(self, params, beta1=0.9, beta2=0.999, eps=1e-8):
        self.params = list(params)
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.t = 0
        self._m = [np.zeros_like(p.data) for p in self.params]
        self._v = [np.zeros_like(p.data) for p in self.params]

    def zero_grads(self):
        for p in self.params:
            p.zero_grad()

    def step(self, lr):
        """One update with the given learning rate; missing grads count as zero."""
        self.t += 1
        bc1 = 1.0 - self.beta1 ** self.t
        bc2 = 1.0 - self.beta2 ** self.t
        for p, m, v in zip(self.params, self._m, self._v):
            g = p.grad
            if g is None:
                g = 0.0
            m *= self.beta1
            m += (1.0 - self.beta1) * g
            v *= self.beta2
            v += (1.0 - self.beta2) * np.square(g)
            p.data -= (lr / bc1) * m / (np.sqrt(v / bc2) + self.eps)
