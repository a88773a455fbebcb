from __future__ import annotations

import logging

import pytest

from debias_cl.core.encoder import Activation, EncoderConfig
from debias_cl.core.errors import ConfigError, DatasetError
from debias_cl.features.bias_stats import behavioral_curves, fit_trend, per_window_models
from debias_cl.features.retrieval import RetrievalConfig
from debias_cl.features.synth import GenConfig, generate
from debias_cl.infra.metrics import MetricsService
from debias_cl.runtime.trainer import TrainConfig
from tests.helpers import small_gen_config


def test_fit_trend_on_a_straight_line() -> None:
    fit = fit_trend("metric", [1, 2, 3, 4], [0.9, 0.8, 0.7, 0.6])
    assert fit.slope == pytest.approx(-0.1)
    assert fit.intercept == pytest.approx(1.0)
    assert fit.spearman_rho == pytest.approx(-1.0)
    assert not fit.ties
    assert fit.points == 4


def test_constant_series_reports_ties() -> None:
    fit = fit_trend("flat", [1, 2, 3], [0.5, 0.5, 0.5])
    assert fit.slope == 0.0
    assert fit.spearman_rho == 0.0
    assert fit.ties


def test_single_point_cannot_be_fitted() -> None:
    with pytest.raises(DatasetError):
        fit_trend("short", [1], [0.3])


def test_behavioral_curves_decline_over_sessions() -> None:
    dataset = generate(GenConfig(seed=42))
    report = behavioral_curves(dataset.sessions)
    assert report.metrics() == ("response_accuracy", "consistency", "activation_fraction")
    assert report.fit("response_accuracy").spearman_rho == pytest.approx(-1.0)
    assert report.fit("consistency").spearman_rho == pytest.approx(-1.0)
    assert report.fit("response_accuracy").slope < 0.0
    assert report.fit("activation_fraction").slope < 0.0
    assert report.fit("activation_fraction").spearman_rho < -0.9
    index, values = report.series("response_accuracy")
    assert index == list(range(1, 41))
    assert values[0] == pytest.approx(0.95)
    with pytest.raises(KeyError):
        report.fit("unknown")


def test_behavioral_curves_need_three_sessions() -> None:
    dataset = generate(small_gen_config(n_sessions=2))
    with pytest.raises(DatasetError):
        behavioral_curves(dataset.sessions)


def _window_inputs() -> tuple[EncoderConfig, TrainConfig, RetrievalConfig]:
    encoder = EncoderConfig(input_dim=12, hidden_dim=8, tap_count=1, output_dim=4, activation=Activation.TANH, init_seed=3)
    train = TrainConfig(lr0=1e-3, epochs=1, batch_size=8, run_seed=5)
    return encoder, train, RetrievalConfig(n_way=5, trials=2, seed=1)


def test_per_window_models_train_one_model_per_window(caplog) -> None:
    dataset = generate(small_gen_config())
    encoder, train, retrieval = _window_inputs()
    metrics = MetricsService()
    with caplog.at_level(logging.INFO, logger="debias_cl.features.bias_stats"):
        report = per_window_models(dataset, encoder, train, retrieval, window_size=2, metrics=metrics)
    assert report.metrics() == ("top1_brain_to_image", "top1_image_to_brain")
    index, values = report.series("top1_brain_to_image")
    assert index == [1, 2, 3]
    assert all(0.0 <= value <= 1.0 for value in values)
    assert report.fit("top1_image_to_brain").points == 3
    counters = metrics.collect_snapshot().counters["train.update"]
    # 30 training rows per window in batches of 8
    assert counters[(("step", "1"),)].count == 4
    assert len(counters) == 3
    assert sum(record.getMessage() == "window_trained" for record in caplog.records) == 3


def test_per_window_models_are_reproducible() -> None:
    dataset = generate(small_gen_config())
    encoder, train, retrieval = _window_inputs()
    first = per_window_models(dataset, encoder, train, retrieval, window_size=3)
    second = per_window_models(dataset, encoder, train, retrieval, window_size=3)
    assert first == second


def test_window_size_must_divide_the_sessions() -> None:
    dataset = generate(small_gen_config())
    encoder, train, retrieval = _window_inputs()
    with pytest.raises(ConfigError) as excinfo:
        per_window_models(dataset, encoder, train, retrieval, window_size=4)
    assert excinfo.value.key == "analyze.window_size"
