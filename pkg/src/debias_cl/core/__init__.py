from __future__ import annotations

from .encoder import (
    Activation,
    EncoderConfig,
    EncoderParams,
    ForwardTrace,
    Snapshot,
    WatchedParams,
    embedding_provider,
    forward,
    init_encoder,
    snapshot_of,
    watch_params,
)
from .errors import DebiasCLError
from .gradcheck import grad_check
from .losses import (
    Batch,
    BiasModel,
    DistillKind,
    LossConfig,
    afm_distance,
    bias_weight,
    cl_loss,
    dcl_loss,
    l2_distill_distance,
    total_loss,
)
from .tensor import GradTape, Tensor
from .types import Direction, SessionMeta, SessionRange, Split

__all__ = [
    "Activation",
    "Batch",
    "BiasModel",
    "DebiasCLError",
    "Direction",
    "DistillKind",
    "EncoderConfig",
    "EncoderParams",
    "ForwardTrace",
    "GradTape",
    "LossConfig",
    "SessionMeta",
    "SessionRange",
    "Snapshot",
    "Split",
    "Tensor",
    "WatchedParams",
    "afm_distance",
    "bias_weight",
    "cl_loss",
    "dcl_loss",
    "embedding_provider",
    "forward",
    "grad_check",
    "init_encoder",
    "l2_distill_distance",
    "snapshot_of",
    "total_loss",
    "watch_params",
]
