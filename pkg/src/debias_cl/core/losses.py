"""Training objectives: session bias weights, de-biased contrastive alignment and
feature distillation against a frozen snapshot."""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import Protocol, Sequence

import numpy as np

from .encoder import EncoderParams, ForwardTrace, ParamsLike, Snapshot, forward
from .errors import DimensionError, DomainError
from .tensor import (
    Tensor,
    log_softmax_rows,
    matmul,
    mul,
    ones,
    reduce_mean,
    reduce_sum,
    rowwise_l2_normalize,
    scale,
    square,
    sub,
    transpose,
)


class BiasModel(str, Enum):
    NONE = "none"
    RESPONSE_ACCURACY = "response_accuracy"
    BRAIN_ACTIVATION = "brain_activation"


class DistillKind(str, Enum):
    NONE = "none"
    L2 = "l2"
    AFM = "afm"


class SessionRates(Protocol):
    response_accuracy: float
    activation_fraction: float


@dataclass(frozen=True)
class LossConfig:
    temperature: float = 0.1
    lambda_cl: float = 1.0
    symmetric_contrastive: bool = False
    distill: DistillKind = DistillKind.AFM
    bias: BiasModel = BiasModel.RESPONSE_ACCURACY

    def __post_init__(self) -> None:
        if not self.temperature > 0.0:
            raise DomainError(f"loss.temperature must be positive, got {self.temperature}")
        if self.lambda_cl < 0.0:
            raise DomainError(f"loss.lambda_cl must be non-negative, got {self.lambda_cl}")
        object.__setattr__(self, "distill", DistillKind(self.distill))
        object.__setattr__(self, "bias", BiasModel(self.bias))


@dataclass(frozen=True)
class Batch:
    """Aligned rows of signals ``x``, centroids ``c`` and per-sample bias weights."""

    x: np.ndarray
    c: np.ndarray
    weights: np.ndarray

    @property
    def size(self) -> int:
        return int(self.x.shape[0])


def _rate_weight(rate: float, label: str) -> float:
    if not 0.0 <= rate <= 1.0 or math.isnan(rate):
        raise DomainError(f"{label} must lie in [0, 1], got {rate}")
    return math.exp(1.0 - rate)


def bias_weight(model: BiasModel, meta: SessionRates) -> float:
    """``e^(1 - rate)`` for the chosen session rate, ``1.0`` for :attr:`BiasModel.NONE`."""

    if model is BiasModel.NONE:
        return 1.0
    if model is BiasModel.RESPONSE_ACCURACY:
        return _rate_weight(meta.response_accuracy, "response_accuracy")
    return _rate_weight(meta.activation_fraction, "activation_fraction")


def _contrastive_direction(logits: Tensor, weights: np.ndarray) -> Tensor:
    # diag(w) picks the matching pair of each row and scales it by its session weight
    log_probs = log_softmax_rows(logits)
    picked = reduce_sum(mul(log_probs, Tensor(np.diag(weights))))
    return scale(picked, -1.0 / weights.shape[0])


def dcl_loss(
    z: Tensor,
    c: Tensor,
    weights: Sequence[float] | np.ndarray,
    temperature: float,
    *,
    symmetric: bool = False,
) -> Tensor:
    """Weighted InfoNCE where each centroid's softmax runs over the brain embeddings."""

    if z.shape != c.shape or len(z.shape) != 2:
        raise DimensionError("dcl_loss needs matching B x d inputs", z.shape, c.shape)
    batch = z.shape[0]
    if batch < 2:
        raise DomainError("dcl_loss needs a batch of at least 2 for negatives")
    w = np.asarray(weights, dtype=np.float64)
    if w.shape != (batch,):
        raise DimensionError("weights length must equal the batch size", w.shape, (batch,))
    if not temperature > 0.0:
        raise DomainError(f"temperature must be positive, got {temperature}")
    z_hat = rowwise_l2_normalize(z)
    c_hat = rowwise_l2_normalize(c)
    # row j: centroid j against every brain embedding z'
    logits = scale(matmul(c_hat, transpose(z_hat)), 1.0 / temperature)
    loss = _contrastive_direction(logits, w)
    if symmetric:
        reverse = _contrastive_direction(transpose(logits), w)
        loss = scale(loss + reverse, 0.5)
    return loss


def _row_cosines(a: Tensor, b: Tensor) -> Tensor:
    if a.shape != b.shape or len(a.shape) != 2:
        raise DimensionError("feature shapes differ", a.shape, b.shape)
    products = mul(rowwise_l2_normalize(a), rowwise_l2_normalize(b))
    return matmul(products, ones((a.shape[1], 1)))


def afm_distance(z_prev: Tensor, z_cur: Tensor) -> Tensor:
    """Mean over rows of ``(1 - cos(z_prev, z_cur))^2``; ``z_prev`` is held constant."""

    cosines = _row_cosines(z_prev.detach(), z_cur)
    return reduce_mean(square(sub(ones(cosines.shape), cosines)))


def l2_distill_distance(z_prev: Tensor, z_cur: Tensor) -> Tensor:
    if z_prev.shape != z_cur.shape or len(z_cur.shape) != 2:
        raise DimensionError("feature shapes differ", z_prev.shape, z_cur.shape)
    diff = sub(z_cur, z_prev.detach())
    return scale(reduce_sum(square(diff)), 1.0 / z_cur.shape[0])


def cl_loss(trace_prev: ForwardTrace, trace_cur: ForwardTrace, kind: DistillKind) -> Tensor:
    if kind is DistillKind.NONE:
        raise DomainError("cl_loss needs a distillation metric")
    layers_prev, layers_cur = trace_prev.intermediates, trace_cur.intermediates
    if len(layers_prev) != len(layers_cur) or not layers_cur:
        raise DimensionError("traces expose different tap counts", (len(layers_prev),), (len(layers_cur),))
    metric = afm_distance if kind is DistillKind.AFM else l2_distill_distance
    total: Tensor | None = None
    for prev, cur in zip(layers_prev, layers_cur):
        term = metric(prev, cur)
        total = term if total is None else total + term
    assert total is not None
    return scale(total, 1.0 / len(layers_cur))


def total_loss(batch: Batch, params: ParamsLike, snapshot: Snapshot | None, cfg: LossConfig) -> Tensor:
    """Contrastive term plus ``lambda_cl`` times distillation when a snapshot exists."""

    if batch.size < 2:
        raise DomainError("total_loss needs a batch of at least 2")
    record = not isinstance(params, EncoderParams)
    trace = forward(params, batch.x, record_gradients=record)
    loss = dcl_loss(
        trace.output,
        Tensor(batch.c),
        batch.weights,
        cfg.temperature,
        symmetric=cfg.symmetric_contrastive,
    )
    if snapshot is None or cfg.distill is DistillKind.NONE or cfg.lambda_cl == 0.0:
        return loss
    previous = snapshot.forward(batch.x)
    return loss + scale(cl_loss(previous, trace, cfg.distill), cfg.lambda_cl)


__all__ = [
    "Batch",
    "BiasModel",
    "DistillKind",
    "LossConfig",
    "afm_distance",
    "bias_weight",
    "cl_loss",
    "dcl_loss",
    "l2_distill_distance",
    "total_loss",
]
