from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Callable

from ..core.encoder import EncoderConfig, EncoderParams, Snapshot, init_encoder, snapshot_of
from ..core.errors import DimensionError, ProtocolError
from ..features.retrieval import ReportRow, RetrievalConfig, evaluate_step
from ..features.synth.dataset import Dataset
from ..infra.metrics import MetricsRecorder
from .protocol import CLProtocol, PlannedStep, plan_steps
from .trainer import StepData, TrainConfig, build_step_data, rehearsal_sample, rehearsal_seed, train_step

_LOGGER = logging.getLogger(__name__)


@dataclass(frozen=True)
class StepOutcome:
    plan: PlannedStep
    params: EncoderParams
    snapshot: Snapshot | None
    epoch_losses: tuple[float, ...]
    rows: tuple[ReportRow, ReportRow]
    rehearsal_size: int


@dataclass(frozen=True)
class ProtocolRun:
    protocol: CLProtocol
    steps: tuple[StepOutcome, ...]

    @property
    def rows(self) -> tuple[ReportRow, ...]:
        return tuple(row for step in self.steps for row in step.rows)

    @property
    def final_params(self) -> EncoderParams:
        return self.steps[-1].params


StepCallback = Callable[[StepOutcome], None]


def run_protocol(
    dataset: Dataset,
    protocol: CLProtocol,
    encoder: EncoderConfig,
    train: TrainConfig,
    retrieval: RetrievalConfig,
    *,
    metrics: MetricsRecorder | None = None,
    on_step: StepCallback | None = None,
    threads: int | None = 1,
) -> ProtocolRun:
    """Train step by step, warm-starting from the previous step and distilling against its snapshot.

    After each step the encoder is evaluated on the test samples of sessions ``1..last``.
    """

    if not dataset.covers(protocol.n_sessions):
        raise ProtocolError(
            f"dataset has {dataset.header.n_sessions} sessions, protocol needs {protocol.n_sessions}",
            key="protocol.n_sessions",
        )
    if (encoder.input_dim, encoder.output_dim) != (dataset.header.fmri_dim, dataset.header.embed_dim):
        raise DimensionError(
            "encoder dims do not match the dataset",
            (encoder.input_dim, encoder.output_dim),
            (dataset.header.fmri_dim, dataset.header.embed_dim),
        )
    params = init_encoder(encoder)
    snapshot: Snapshot | None = None
    buffer: StepData | None = None
    outcomes: list[StepOutcome] = []
    for planned in plan_steps(protocol):
        step_data = build_step_data(dataset, planned.sessions, train.loss.bias)
        result = train_step(
            params,
            snapshot,
            step_data,
            train,
            step_index=planned.index,
            rehearsal=buffer,
            metrics=metrics,
        )
        rows = evaluate_step(result.params, dataset, planned.eval_range, retrieval, step=planned.index, threads=threads)
        outcome = StepOutcome(
            plan=planned,
            params=result.params,
            snapshot=snapshot,
            epoch_losses=result.epoch_losses,
            rows=rows,
            rehearsal_size=0 if buffer is None else buffer.size,
        )
        outcomes.append(outcome)
        _LOGGER.info(
            "protocol_step_finished",
            extra={
                "event": "protocol_step_finished",
                "step": planned.index,
                "sessions": planned.sessions.label,
                "top1_brain_to_image": rows[0].top1,
                "top1_image_to_brain": rows[1].top1,
            },
        )
        if on_step is not None:
            on_step(outcome)
        params = result.params
        snapshot = snapshot_of(params, planned.index)
        if train.rehearsal_fraction > 0.0:
            buffer = rehearsal_sample(step_data, train.rehearsal_fraction, rehearsal_seed(train.run_seed, planned.index))
    return ProtocolRun(protocol=protocol, steps=tuple(outcomes))


__all__ = ["ProtocolRun", "StepCallback", "StepOutcome", "run_protocol"]
