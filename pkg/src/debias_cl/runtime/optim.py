"""AdamW with decoupled weight decay and the per-epoch cosine learning-rate schedule."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from ..core.errors import DimensionError, DomainError, NumericFailure


@dataclass(frozen=True)
class AdamWConfig:
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    weight_decay: float = 0.01

    def __post_init__(self) -> None:
        if not (0.0 <= self.beta1 < 1.0 and 0.0 <= self.beta2 < 1.0):
            raise DomainError("optimizer betas must lie in [0, 1)")
        if self.eps <= 0.0 or self.weight_decay < 0.0:
            raise DomainError("optimizer eps must be positive and weight_decay non-negative")


@dataclass(frozen=True)
class AdamWState:
    timestep: int
    first_moment: tuple[np.ndarray, ...]
    second_moment: tuple[np.ndarray, ...]

    @classmethod
    def zeros_like(cls, params: Sequence[np.ndarray]) -> "AdamWState":
        return cls(
            timestep=0,
            first_moment=tuple(np.zeros_like(p, dtype=np.float64) for p in params),
            second_moment=tuple(np.zeros_like(p, dtype=np.float64) for p in params),
        )


def cosine_lr(epoch: int, total_epochs: int, lr0: float) -> float:
    if total_epochs < 1 or not 0 <= epoch < total_epochs:
        raise DomainError(f"epoch {epoch} outside [0, {total_epochs})")
    return lr0 * 0.5 * (1.0 + math.cos(math.pi * epoch / total_epochs))


def adamw_update(
    params: Sequence[np.ndarray],
    grads: Sequence[np.ndarray],
    state: AdamWState,
    lr: float,
    config: AdamWConfig = AdamWConfig(),
) -> tuple[list[np.ndarray], AdamWState]:
    """One AdamW step; returns new arrays and state, inputs are left untouched."""

    if len(params) != len(grads) or len(params) != len(state.first_moment):
        raise DimensionError("params, grads and state differ in length", (len(params),), (len(grads),))
    for index, (param, grad) in enumerate(zip(params, grads)):
        if param.shape != grad.shape:
            raise DimensionError(f"gradient {index} shape mismatch", param.shape, grad.shape)
        if not np.all(np.isfinite(grad)):
            raise NumericFailure("non-finite gradient", param=index)
    timestep = state.timestep + 1
    correction1 = 1.0 - config.beta1**timestep
    correction2 = 1.0 - config.beta2**timestep
    updated: list[np.ndarray] = []
    first: list[np.ndarray] = []
    second: list[np.ndarray] = []
    for param, grad, m, v in zip(params, grads, state.first_moment, state.second_moment):
        decayed = param - lr * config.weight_decay * param
        m_next = config.beta1 * m + (1.0 - config.beta1) * grad
        v_next = config.beta2 * v + (1.0 - config.beta2) * grad * grad
        step = (m_next / correction1) / (np.sqrt(v_next / correction2) + config.eps)
        updated.append(decayed - lr * step)
        first.append(m_next)
        second.append(v_next)
    return updated, AdamWState(timestep=timestep, first_moment=tuple(first), second_moment=tuple(second))


__all__ = ["AdamWConfig", "AdamWState", "adamw_update", "cosine_lr"]
