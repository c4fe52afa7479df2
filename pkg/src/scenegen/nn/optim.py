"""Adam with decoupled weight decay, and the cosine-restart learning-rate schedule."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

ADAM_BETA1 = 0.9
ADAM_BETA2 = 0.999
ADAM_EPS = 1e-8


@dataclass
class ScheduleConfig:
    base_lr: float = 3e-4
    min_lr: float = 0.0
    restart_period: int = 40000
    weight_decay: float = 0.001

    def __post_init__(self):
        if not (0.0 <= self.min_lr <= self.base_lr):
            raise ValueError("need 0 <= min_lr <= base_lr")
        if self.restart_period < 1:
            raise ValueError("restart_period must be >= 1")


def lr_at(iteration, cfg):
    """Cosine-annealed rate, hard restart every cfg.restart_period iterations."""
    if iteration < 0:
        raise ValueError("iteration must be >= 0")
    t = iteration % cfg.restart_period
    return cfg.min_lr + 0.5 * (cfg.base_lr - cfg.min_lr) * (1.0 + math.cos(math.pi * t / cfg.restart_period))


def adam_step(params, lr, weight_decay=0.0):
    """Bias-corrected Adam update, in place.

    Weight decay is decoupled (theta -= lr*wd*theta before the Adam delta).
    Grads are consumed: cleared after the step.
    """
    for p in params:
        if p.tensor.grad is None:
            raise ValueError(f"adam_step: parameter {p.name!r} has no gradient")
    for p in params:
        g = p.tensor.grad.astype(p.tensor.data.dtype, copy=False)
        if weight_decay != 0.0:
            p.tensor.data = p.tensor.data * (1.0 - lr * weight_decay)
        p.step_count += 1
        t = p.step_count
        p.adam_m = ADAM_BETA1 * p.adam_m + (1.0 - ADAM_BETA1) * g
        p.adam_v = ADAM_BETA2 * p.adam_v + (1.0 - ADAM_BETA2) * (g * g)
        m_hat = p.adam_m / (1.0 - ADAM_BETA1 ** t)
        v_hat = p.adam_v / (1.0 - ADAM_BETA2 ** t)
        p.tensor.data = p.tensor.data - lr * m_hat / (np.sqrt(v_hat) + ADAM_EPS)
        p.clear_grad()


def clear_grads(params):
    for p in params:
        p.clear_grad()
