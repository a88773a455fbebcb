from __future__ import annotations

from .optim import AdamWConfig, AdamWState, adamw_update, cosine_lr
from .protocol import CLProtocol, PlannedStep, StepPlan, plan_steps
from .runner import ProtocolRun, StepOutcome, run_protocol
from .trainer import StepData, StepResult, TrainConfig, rehearsal_sample, train_step

__all__ = [
    "AdamWConfig",
    "AdamWState",
    "CLProtocol",
    "PlannedStep",
    "ProtocolRun",
    "StepData",
    "StepOutcome",
    "StepPlan",
    "StepResult",
    "TrainConfig",
    "adamw_update",
    "cosine_lr",
    "plan_steps",
    "rehearsal_sample",
    "run_protocol",
    "train_step",
]
