from __future__ import annotations

import json
from dataclasses import replace
from pathlib import Path

import numpy as np

from debias_cl.core.encoder import Activation, EncoderConfig, EncoderParams
from debias_cl.core.types import SessionMeta
from debias_cl.features.synth import Dataset, DatasetHeader, GenConfig


def small_gen_config(**overrides: object) -> GenConfig:
    base = GenConfig(
        n_sessions=6,
        samples_per_session=20,
        fmri_dim=12,
        embed_dim=4,
        test_fraction=0.25,
        seed=7,
    )
    return replace(base, **overrides)


def identity_encoder(embed_dim: int, step_seed: int = 0) -> EncoderParams:
    """ReLU encoder mapping ``[c, -c]`` back to ``c`` exactly."""

    width = 2 * embed_dim
    config = EncoderConfig(
        input_dim=width,
        hidden_dim=width,
        tap_count=1,
        output_dim=embed_dim,
        activation=Activation.RELU,
        init_seed=step_seed,
    )
    readout = np.vstack([np.eye(embed_dim), -np.eye(embed_dim)])
    return EncoderParams.from_arrays(
        config,
        [np.eye(width), np.zeros((1, width)), readout, np.zeros((1, embed_dim))],
    )


def mirrored_dataset(n_sessions: int = 4, per_session: int = 20, embed_dim: int = 4, test_count: int = 10) -> Dataset:
    """Signals ``x = [c, -c]`` so :func:`identity_encoder` recovers every centroid."""

    rng = np.random.default_rng(123)
    raw = rng.standard_normal((n_sessions * per_session, embed_dim))
    c = raw / np.linalg.norm(raw, axis=1, keepdims=True)
    header = DatasetHeader(
        n_sessions=n_sessions,
        samples_per_session=per_session,
        fmri_dim=2 * embed_dim,
        embed_dim=embed_dim,
        test_fraction=test_count / per_session,
        seed=0,
    )
    flags = np.zeros(per_session, dtype=bool)
    flags[per_session - test_count :] = True
    sessions = tuple(
        SessionMeta(session_index=t, response_accuracy=0.9 - 0.05 * t, consistency=0.9, activation_fraction=0.5)
        for t in range(1, n_sessions + 1)
    )
    return Dataset(
        header=header,
        sessions=sessions,
        x=np.hstack([c, -c]),
        c=c,
        session=np.repeat(np.arange(1, n_sessions + 1), per_session),
        response_correct=np.ones(n_sessions * per_session, dtype=bool),
        is_test=np.tile(flags, n_sessions),
    )


TINY_DOCUMENT: dict = {
    "data": {
        "n_sessions": 6,
        "samples_per_session": 20,
        "fmri_dim": 12,
        "embed_dim": 4,
        "test_fraction": 0.25,
        "seed": 7,
    },
    "encoder": {"hidden_dim": 8, "tap_count": 1},
    "protocol": {"n_init": 2, "n_step": 2},
    "train": {"epochs": 1, "batch_size": 8},
    "retrieval": {"n_way": 5, "trials": 2},
    "analyze": {"window_size": 2},
}


def write_config(path: Path, document: dict) -> Path:
    path.write_text(json.dumps(document), encoding="utf-8")
    return path
