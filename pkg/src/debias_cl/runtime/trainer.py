"""One learning step: mini-batch AdamW over the step's sessions, plus the rehearsal buffer."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field, replace

import numpy as np

from ..core.encoder import EncoderParams, Snapshot, watch_params
from ..core.errors import DimensionError, DomainError, NumericFailure
from ..core.losses import Batch, BiasModel, DistillKind, LossConfig, bias_weight, total_loss
from ..core.tensor import GradTape
from ..core.types import SessionRange, Split
from ..features.synth.dataset import Dataset
from ..features.synth.generator import round_half_up
from ..infra.metrics import MetricsRecorder, NullMetricsRecorder
from .optim import AdamWConfig, AdamWState, adamw_update, cosine_lr

_LOGGER = logging.getLogger(__name__)

# mixed into rehearsal seeds so they never collide with shuffle streams
_REHEARSAL_STREAM = 0x5245


@dataclass(frozen=True)
class TrainConfig:
    lr0: float = 2.5e-4
    epochs: int = 50
    batch_size: int = 16
    loss: LossConfig = field(default_factory=LossConfig)
    rehearsal_fraction: float = 0.0
    run_seed: int = 0
    optimizer: AdamWConfig = field(default_factory=AdamWConfig)

    def __post_init__(self) -> None:
        if not self.lr0 > 0.0:
            raise DomainError(f"train.lr0 must be positive, got {self.lr0}")
        if isinstance(self.epochs, bool) or not isinstance(self.epochs, int) or self.epochs < 1:
            raise DomainError(f"train.epochs must be >= 1, got {self.epochs!r}")
        if isinstance(self.batch_size, bool) or not isinstance(self.batch_size, int) or self.batch_size < 2:
            raise DomainError(f"train.batch_size must be >= 2, got {self.batch_size!r}")
        if not 0.0 <= self.rehearsal_fraction < 1.0:
            raise DomainError(f"train.rehearsal_fraction must lie in [0, 1), got {self.rehearsal_fraction}")
        if not 0 <= self.run_seed < 2**64:
            raise DomainError("train.run_seed must fit in 64 bits")


@dataclass(frozen=True)
class StepData:
    """Training rows for one step; ``sample_ids`` are dataset row ids."""

    x: np.ndarray
    c: np.ndarray
    weights: np.ndarray
    sample_ids: np.ndarray

    def __post_init__(self) -> None:
        rows = self.x.shape[0]
        if self.c.shape[0] != rows or self.weights.shape != (rows,) or self.sample_ids.shape != (rows,):
            raise DimensionError("step data columns differ in length", self.x.shape, self.c.shape)

    @property
    def size(self) -> int:
        return int(self.x.shape[0])

    def take(self, rows: np.ndarray) -> "StepData":
        return StepData(self.x[rows], self.c[rows], self.weights[rows], self.sample_ids[rows])

    def concat(self, other: "StepData") -> "StepData":
        return StepData(
            np.concatenate([self.x, other.x]),
            np.concatenate([self.c, other.c]),
            np.concatenate([self.weights, other.weights]),
            np.concatenate([self.sample_ids, other.sample_ids]),
        )

    @classmethod
    def empty_like(cls, other: "StepData") -> "StepData":
        return other.take(np.zeros(0, dtype=np.int64))


@dataclass(frozen=True)
class StepResult:
    params: EncoderParams
    epoch_losses: tuple[float, ...]
    updates: int
    samples: int


def session_weights(dataset: Dataset, model: BiasModel) -> np.ndarray:
    """Per-sample bias weight, looked up from each sample's recording session."""

    by_session = np.array([bias_weight(model, meta) for meta in dataset.sessions], dtype=np.float64)
    return by_session[dataset.session - 1]


def build_step_data(
    dataset: Dataset,
    sessions: SessionRange,
    bias: BiasModel,
    split: Split = Split.TRAIN,
) -> StepData:
    ids = dataset.indices(sessions, split)
    weights = session_weights(dataset, bias)
    return StepData(x=dataset.x[ids], c=dataset.c[ids], weights=weights[ids], sample_ids=ids.astype(np.int64))


def derive_seed(*words: int) -> int:
    return int(np.random.SeedSequence([int(w) for w in words]).generate_state(1, np.uint64)[0])


def rehearsal_sample(previous: StepData, fraction: float, seed: int) -> StepData:
    """Uniform subset of ``round(fraction * |previous|)`` rows without replacement, kept in row order."""

    if not 0.0 <= fraction < 1.0:
        raise DomainError(f"rehearsal fraction must lie in [0, 1), got {fraction}")
    size = round_half_up(fraction * previous.size)
    if size == 0:
        return StepData.empty_like(previous)
    rng = np.random.Generator(np.random.Philox(key=seed))
    rows = np.sort(rng.choice(previous.size, size=size, replace=False))
    return previous.take(rows)


def rehearsal_seed(run_seed: int, step_index: int) -> int:
    return derive_seed(run_seed, step_index, _REHEARSAL_STREAM)


def epoch_batches(size: int, batch_size: int, run_seed: int, step_index: int, epoch: int) -> list[np.ndarray]:
    """Shuffle rows with a ``(run_seed, step, epoch)`` stream and cut into batches.

    A trailing batch of one row is completed with the first row of the permutation.
    """

    rng = np.random.Generator(np.random.Philox(np.random.SeedSequence([run_seed, step_index, epoch])))
    order = rng.permutation(size)
    batches = [order[start : start + batch_size] for start in range(0, size, batch_size)]
    if len(batches[-1]) == 1:
        batches[-1] = np.append(batches[-1], order[0])
    return batches


def _loss_config(cfg: TrainConfig) -> LossConfig:
    if cfg.rehearsal_fraction > 0.0:
        return replace(cfg.loss, distill=DistillKind.NONE)
    return cfg.loss


def train_step(
    params: EncoderParams,
    snapshot: Snapshot | None,
    step_data: StepData,
    cfg: TrainConfig,
    *,
    step_index: int = 1,
    rehearsal: StepData | None = None,
    metrics: MetricsRecorder | None = None,
) -> StepResult:
    """Run ``epochs * ceil(N / batch_size)`` AdamW updates of the combined loss.

    Rehearsal rows are appended to ``step_data``; with a positive rehearsal fraction the
    distillation term is switched off.
    """

    recorder = metrics or NullMetricsRecorder()
    data = step_data if rehearsal is None or rehearsal.size == 0 else step_data.concat(rehearsal)
    if data.size < 2:
        raise DomainError(f"step {step_index} has {data.size} training rows; need at least 2")
    loss_cfg = _loss_config(cfg)
    config = params.config
    current = params
    state = AdamWState.zeros_like(current.arrays())
    tags = {"step": str(step_index)}
    history: list[float] = []
    updates = 0

    _LOGGER.info(
        "step_started",
        extra={
            "event": "step_started",
            "step": step_index,
            "samples": data.size,
            "rehearsal": 0 if rehearsal is None else rehearsal.size,
            "distill": loss_cfg.distill.value,
            "has_snapshot": snapshot is not None,
        },
    )
    for epoch in range(cfg.epochs):
        lr = cosine_lr(epoch, cfg.epochs, cfg.lr0)
        epoch_total = 0.0
        batches = epoch_batches(data.size, cfg.batch_size, cfg.run_seed, step_index, epoch)
        for batch_index, rows in enumerate(batches):
            batch = Batch(x=data.x[rows], c=data.c[rows], weights=data.weights[rows])
            try:
                with GradTape() as tape:
                    watched = watch_params(current, tape)
                    loss = total_loss(batch, watched, snapshot, loss_cfg)
                    value = loss.item()
                    if not math.isfinite(value):
                        raise NumericFailure("non-finite loss")
                    tape.backward(loss)
                    grads = [tape.gradient(tensor) for tensor in watched.tensors]
                arrays, state = adamw_update(current.arrays(), grads, state, lr, cfg.optimizer)
            except NumericFailure as exc:
                _LOGGER.error(
                    "numeric_failure",
                    extra={"event": "numeric_failure", "step": step_index, "epoch": epoch, "batch": batch_index},
                )
                raise NumericFailure(
                    exc.reason, step=step_index, epoch=epoch, batch=batch_index, **exc.coordinates
                ) from exc
            current = EncoderParams.from_arrays(config, arrays)
            epoch_total += value
            updates += 1
            recorder.increment("train.update", tags)
            recorder.observe("train.loss", value, tags)
        mean_loss = epoch_total / len(batches)
        history.append(mean_loss)
        recorder.observe("train.lr", lr, tags)
        _LOGGER.debug(
            "epoch_finished",
            extra={"event": "epoch_finished", "step": step_index, "epoch": epoch, "loss": mean_loss, "lr": lr},
        )
    _LOGGER.info(
        "step_finished",
        extra={"event": "step_finished", "step": step_index, "updates": updates, "final_loss": history[-1]},
    )
    return StepResult(params=current, epoch_losses=tuple(history), updates=updates, samples=data.size)


__all__ = [
    "StepData",
    "StepResult",
    "TrainConfig",
    "build_step_data",
    "derive_seed",
    "epoch_batches",
    "rehearsal_sample",
    "rehearsal_seed",
    "session_weights",
    "train_step",
]
