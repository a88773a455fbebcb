from __future__ import annotations

import logging
import math

import numpy as np
import pytest
from scipy.stats import spearmanr

from debias_cl.core.errors import DomainError
from debias_cl.core.types import SessionRange, Split
from debias_cl.features.synth import GenConfig, format_digest, generate, session_stats
from debias_cl.features.synth.generator import baseline_level, drift_phase, noise_scale, response_rate, signal_gain
from tests.helpers import small_gen_config


def test_default_configuration_shape() -> None:
    cfg = GenConfig(seed=42)
    dataset = generate(cfg)
    assert dataset.header.n_sessions == 40
    assert dataset.n_samples == 4000
    assert dataset.x.shape == (4000, 64)
    assert dataset.c.shape == (4000, 16)
    np.testing.assert_allclose(np.linalg.norm(dataset.c, axis=1), np.ones(4000))
    assert dataset.indices(SessionRange(1, 1), Split.TEST).size == 20
    assert dataset.indices(SessionRange(1, 40), Split.TRAIN).size == 3200


def test_response_schedule_is_linear_from_max_to_min() -> None:
    cfg = GenConfig()
    assert response_rate(cfg, 1) == pytest.approx(0.95)
    assert response_rate(cfg, 40) == pytest.approx(0.70)
    rates = [response_rate(cfg, t) for t in range(1, 41)]
    assert np.all(np.diff(rates) < 0.0)
    assert signal_gain(cfg, 1.0) == pytest.approx(1.0)
    assert noise_scale(cfg, 0.7) > noise_scale(cfg, 0.95)
    assert baseline_level(cfg, 0.5) == pytest.approx(0.0)


def test_activation_fraction_falls_over_sessions() -> None:
    dataset = generate(GenConfig(seed=42))
    index = [meta.session_index for meta in dataset.sessions]
    activation = [meta.activation_fraction for meta in dataset.sessions]
    assert spearmanr(index, activation)[0] < -0.9


def test_session_metadata_follows_schedule() -> None:
    cfg = small_gen_config()
    dataset = generate(cfg)
    for meta in dataset.sessions:
        rate = response_rate(cfg, meta.session_index)
        assert meta.response_accuracy == pytest.approx(rate)
        assert meta.consistency == pytest.approx(min(1.0, rate + 0.03))


def test_identical_configs_are_bit_identical() -> None:
    first, second = generate(small_gen_config()), generate(small_gen_config())
    assert np.array_equal(first.x, second.x)
    assert np.array_equal(first.c, second.c)
    assert np.array_equal(first.response_correct, second.response_correct)
    other = generate(small_gen_config(seed=8))
    assert not np.array_equal(first.x, other.x)


def test_drift_leaves_first_session_and_centroids_untouched() -> None:
    still = generate(small_gen_config())
    drifting = generate(small_gen_config(drift_angle=math.pi / 2))
    first = still.session == 1
    assert np.array_equal(still.c, drifting.c)
    assert np.array_equal(still.x[first], drifting.x[first])
    assert not np.array_equal(still.x[~first], drifting.x[~first])
    assert drift_phase(small_gen_config(drift_angle=1.0), 6) == pytest.approx(1.0)


def test_invalid_configs_are_rejected() -> None:
    with pytest.raises(DomainError):
        small_gen_config(test_fraction=0.01)
    with pytest.raises(DomainError):
        small_gen_config(r_min=0.99)
    with pytest.raises(DomainError):
        small_gen_config(drift_angle=4.0)
    with pytest.raises(DomainError):
        small_gen_config(n_sessions=0)


def test_dataset_arrays_are_read_only() -> None:
    dataset = generate(small_gen_config())
    with pytest.raises(ValueError):
        dataset.x[0, 0] = 1.0


def test_session_stats_and_digest() -> None:
    dataset = generate(GenConfig(seed=3))
    rows = session_stats(dataset)
    assert len(rows) == 40
    assert all(row.samples == 100 for row in rows)
    assert rows[0].response_accuracy > rows[-1].response_accuracy
    assert rows[0].activation_fraction == pytest.approx(dataset.sessions[0].activation_fraction)
    assert rows[0].activation_fraction > rows[-1].activation_fraction
    digest = format_digest(rows)
    assert digest.splitlines()[0].startswith("session")
    assert len(digest.splitlines()) == 41


def test_generation_is_logged(caplog) -> None:
    with caplog.at_level(logging.INFO, logger="debias_cl.features.synth.generator"):
        generate(small_gen_config())
    records = [record for record in caplog.records if record.getMessage() == "dataset_generated"]
    assert len(records) == 1
    assert records[0].samples == 120
