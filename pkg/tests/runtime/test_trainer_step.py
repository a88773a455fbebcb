from __future__ import annotations

import math

import numpy as np
import pytest

from debias_cl.core.encoder import Activation, EncoderConfig, init_encoder, snapshot_of
from debias_cl.core.errors import DomainError, NumericFailure
from debias_cl.core.losses import BiasModel, bias_weight
from debias_cl.core.types import SessionRange
from debias_cl.features.synth import generate
from debias_cl.infra.metrics import MetricsService
from debias_cl.runtime.trainer import (
    StepData,
    TrainConfig,
    build_step_data,
    derive_seed,
    epoch_batches,
    rehearsal_sample,
    rehearsal_seed,
    train_step,
)
from tests.helpers import small_gen_config

_ENCODER = EncoderConfig(input_dim=12, hidden_dim=8, tap_count=2, output_dim=4, activation=Activation.TANH, init_seed=1)


def _step_data(size: int) -> StepData:
    rng = np.random.default_rng(0)
    c = rng.standard_normal((size, 4))
    return StepData(
        x=rng.standard_normal((size, 12)),
        c=c / np.linalg.norm(c, axis=1, keepdims=True),
        weights=np.ones(size),
        sample_ids=np.arange(1000, 1000 + size),
    )


def test_rehearsal_buffer_size_and_order() -> None:
    previous = _step_data(200)
    buffer = rehearsal_sample(previous, 0.1, seed=9)
    assert buffer.size == 20
    assert np.all(np.diff(buffer.sample_ids) > 0)
    assert set(buffer.sample_ids) <= set(previous.sample_ids)
    again = rehearsal_sample(previous, 0.1, seed=9)
    np.testing.assert_array_equal(buffer.sample_ids, again.sample_ids)
    assert rehearsal_sample(previous, 0.0, seed=9).size == 0
    assert rehearsal_sample(_step_data(25), 0.1, seed=1).size == 3
    with pytest.raises(DomainError):
        rehearsal_sample(previous, 1.0, seed=9)


def test_rehearsal_seeds_differ_per_step() -> None:
    assert rehearsal_seed(42, 1) != rehearsal_seed(42, 2)
    assert rehearsal_seed(42, 1) == rehearsal_seed(42, 1)
    assert derive_seed(1, 2) != derive_seed(2, 1)


def test_epoch_batches_cover_every_row() -> None:
    batches = epoch_batches(33, 16, run_seed=4, step_index=1, epoch=0)
    assert [len(batch) for batch in batches] == [16, 16, 2]
    assert batches[-1][1] == batches[0][0]
    assert sorted(np.concatenate(batches[:-1]).tolist() + [batches[-1][0]]) == list(range(33))
    assert [len(batch) for batch in epoch_batches(32, 16, 4, 1, 0)] == [16, 16]
    again = epoch_batches(33, 16, run_seed=4, step_index=1, epoch=0)
    assert all(np.array_equal(a, b) for a, b in zip(batches, again))
    other = epoch_batches(33, 16, run_seed=4, step_index=1, epoch=1)
    assert not np.array_equal(batches[0], other[0])


def test_step_data_carries_session_weights() -> None:
    dataset = generate(small_gen_config())
    data = build_step_data(dataset, SessionRange(2, 3), BiasModel.RESPONSE_ACCURACY)
    assert data.size == 30
    sessions = dataset.session[data.sample_ids]
    for session in (2, 3):
        expected = bias_weight(BiasModel.RESPONSE_ACCURACY, dataset.meta(session))
        np.testing.assert_allclose(data.weights[sessions == session], expected)
    assert not np.any(dataset.is_test[data.sample_ids])
    flat = build_step_data(dataset, SessionRange(2, 3), BiasModel.NONE)
    np.testing.assert_array_equal(flat.weights, np.ones(30))


def test_train_step_update_count_and_history() -> None:
    data = _step_data(40)
    cfg = TrainConfig(lr0=1e-3, epochs=3, batch_size=16, run_seed=2)
    metrics = MetricsService()
    result = train_step(init_encoder(_ENCODER), None, data, cfg, step_index=1, metrics=metrics)
    assert result.updates == 3 * math.ceil(40 / 16)
    assert len(result.epoch_losses) == 3
    assert all(math.isfinite(loss) for loss in result.epoch_losses)
    assert result.samples == 40
    snapshot = metrics.collect_snapshot()
    assert snapshot.counters["train.update"][(("step", "1"),)].count == 9
    assert snapshot.observations["train.lr"][(("step", "1"),)].count == 3


def test_train_step_is_deterministic() -> None:
    data = _step_data(30)
    cfg = TrainConfig(lr0=1e-3, epochs=2, batch_size=8, run_seed=3)
    first = train_step(init_encoder(_ENCODER), None, data, cfg)
    second = train_step(init_encoder(_ENCODER), None, data, cfg)
    np.testing.assert_array_equal(first.params.flatten(), second.params.flatten())
    assert first.epoch_losses == second.epoch_losses
    shifted = train_step(init_encoder(_ENCODER), None, data, TrainConfig(lr0=1e-3, epochs=2, batch_size=8, run_seed=4))
    assert not np.array_equal(first.params.flatten(), shifted.params.flatten())


def test_train_step_leaves_the_snapshot_untouched() -> None:
    params = init_encoder(_ENCODER)
    snapshot = snapshot_of(params, 1)
    before = snapshot.params.flatten().copy()
    result = train_step(params, snapshot, _step_data(20), TrainConfig(lr0=1e-3, epochs=1, batch_size=8))
    np.testing.assert_array_equal(snapshot.params.flatten(), before)
    assert not np.array_equal(result.params.flatten(), before)


def test_rehearsal_rows_join_the_training_set() -> None:
    data = _step_data(30)
    buffer = rehearsal_sample(_step_data(50), 0.1, seed=5)
    cfg = TrainConfig(lr0=1e-3, epochs=1, batch_size=8, rehearsal_fraction=0.1)
    result = train_step(init_encoder(_ENCODER), snapshot_of(init_encoder(_ENCODER), 1), data, cfg, rehearsal=buffer)
    assert result.samples == 35
    assert result.updates == math.ceil(35 / 8)


def test_too_few_rows_is_a_domain_error() -> None:
    data = _step_data(1)
    with pytest.raises(DomainError):
        train_step(init_encoder(_ENCODER), None, data, TrainConfig(epochs=1, batch_size=2))


def test_non_finite_loss_reports_its_coordinates() -> None:
    data = _step_data(16)
    poisoned = StepData(np.full_like(data.x, np.nan), data.c, data.weights, data.sample_ids)
    with pytest.raises(NumericFailure) as excinfo:
        train_step(init_encoder(_ENCODER), None, poisoned, TrainConfig(epochs=2, batch_size=8), step_index=3)
    coordinates = excinfo.value.coordinates
    assert (coordinates["step"], coordinates["epoch"], coordinates["batch"]) == (3, 0, 0)


def test_train_config_validation() -> None:
    with pytest.raises(DomainError):
        TrainConfig(lr0=0.0)
    with pytest.raises(DomainError):
        TrainConfig(batch_size=1)
    with pytest.raises(DomainError):
        TrainConfig(rehearsal_fraction=1.0)
