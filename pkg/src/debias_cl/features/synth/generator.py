"""記憶減衰バイアスを再現する合成セッションデータ生成器.

セッションが進むほど正答率 r(t) が線形に下がり、信号ゲインが減衰し、ノイズが増え、
ベースライン低下により正値ボクセル割合 a(t) が下がる。
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np

from ...core.errors import DomainError
from ...core.types import SessionMeta
from .dataset import Dataset, DatasetHeader

_LOGGER = logging.getLogger(__name__)

CONSISTENCY_OFFSET = 0.03


@dataclass(frozen=True)
class GenConfig:
    n_sessions: int = 40
    samples_per_session: int = 100
    fmri_dim: int = 64
    embed_dim: int = 16
    r_max: float = 0.95
    r_min: float = 0.70
    gain_floor: float = 0.55
    noise_base: float = 0.25
    noise_growth: float = 1.0
    test_fraction: float = 0.2
    seed: int = 0
    baseline_scale: float = 0.4
    drift_angle: float = 0.0

    def __post_init__(self) -> None:
        for name in ("n_sessions", "samples_per_session", "fmri_dim", "embed_dim"):
            value = getattr(self, name)
            if isinstance(value, bool) or not isinstance(value, int) or value <= 0:
                raise DomainError(f"data.{name} must be a positive integer, got {value!r}")
        if not (0.0 <= self.r_min <= self.r_max <= 1.0):
            raise DomainError(f"data.r_min/r_max must satisfy 0 <= r_min <= r_max <= 1, got {self.r_min}/{self.r_max}")
        if not 0.0 < self.gain_floor <= 1.0:
            raise DomainError(f"data.gain_floor must lie in (0, 1], got {self.gain_floor}")
        if self.noise_base < 0.0 or self.noise_growth < 0.0:
            raise DomainError("data.noise_base and data.noise_growth must be non-negative")
        if not 0.0 < self.test_fraction < 1.0:
            raise DomainError(f"data.test_fraction must lie in (0, 1), got {self.test_fraction}")
        test_count = self.test_count
        if not 1 <= test_count < self.samples_per_session:
            raise DomainError(
                f"data.test_fraction leaves {test_count} test samples of {self.samples_per_session}; "
                "each session needs both splits"
            )
        if not 0 <= self.seed < 2**64:
            raise DomainError("data.seed must fit in 64 bits")
        if not 0.0 <= self.drift_angle <= math.pi:
            raise DomainError(f"data.drift_angle must lie in [0, pi], got {self.drift_angle}")

    @property
    def test_count(self) -> int:
        return round_half_up(self.test_fraction * self.samples_per_session)

    def header(self) -> DatasetHeader:
        return DatasetHeader(
            n_sessions=self.n_sessions,
            samples_per_session=self.samples_per_session,
            fmri_dim=self.fmri_dim,
            embed_dim=self.embed_dim,
            test_fraction=self.test_fraction,
            seed=self.seed,
        )


def round_half_up(value: float) -> int:
    return int(math.floor(value + 0.5))


def response_rate(cfg: GenConfig, session_index: int) -> float:
    if cfg.n_sessions == 1:
        return cfg.r_max
    return cfg.r_max - (cfg.r_max - cfg.r_min) * (session_index - 1) / (cfg.n_sessions - 1)


def signal_gain(cfg: GenConfig, rate: float) -> float:
    return cfg.gain_floor + (1.0 - cfg.gain_floor) * rate


def noise_scale(cfg: GenConfig, rate: float) -> float:
    return cfg.noise_base * (1.0 + cfg.noise_growth * (1.0 - rate))


def baseline_level(cfg: GenConfig, rate: float) -> float:
    return cfg.baseline_scale * (2.0 * rate - 1.0)


def drift_phase(cfg: GenConfig, session_index: int) -> float:
    if cfg.n_sessions == 1:
        return 0.0
    return cfg.drift_angle * (session_index - 1) / (cfg.n_sessions - 1)


def generate(cfg: GenConfig) -> Dataset:
    """Build a dataset from ``cfg``; identical configs give bit-identical output."""

    rng = np.random.Generator(np.random.Philox(key=cfg.seed))
    n, d, per = cfg.fmri_dim, cfg.embed_dim, cfg.samples_per_session
    mixing = rng.normal(0.0, 1.0 / math.sqrt(d), size=(n, d))
    # drawn even without drift so the remaining stream is independent of drift_angle
    drift_target = rng.normal(0.0, 1.0 / math.sqrt(d), size=(n, d))

    xs: list[np.ndarray] = []
    cs: list[np.ndarray] = []
    correct: list[np.ndarray] = []
    metas: list[SessionMeta] = []
    test_flags = np.zeros(per, dtype=np.bool_)
    test_flags[per - cfg.test_count :] = True

    for t in range(1, cfg.n_sessions + 1):
        rate = response_rate(cfg, t)
        phase = drift_phase(cfg, t)
        weights = math.cos(phase) * mixing + math.sin(phase) * drift_target
        raw = rng.standard_normal((per, d))
        centroids = raw / np.linalg.norm(raw, axis=1, keepdims=True)
        noise = rng.standard_normal((per, n))
        signals = (
            signal_gain(cfg, rate) * centroids @ weights.T
            + baseline_level(cfg, rate)
            + noise_scale(cfg, rate) * noise
        )
        answered = rng.random(per) < rate
        activation = float(np.mean(signals > 0.0))
        metas.append(
            SessionMeta(
                session_index=t,
                response_accuracy=rate,
                consistency=min(1.0, max(0.0, rate + CONSISTENCY_OFFSET)),
                activation_fraction=activation,
            )
        )
        xs.append(signals)
        cs.append(centroids)
        correct.append(answered)

    dataset = Dataset(
        header=cfg.header(),
        sessions=tuple(metas),
        x=np.concatenate(xs),
        c=np.concatenate(cs),
        session=np.repeat(np.arange(1, cfg.n_sessions + 1), per),
        response_correct=np.concatenate(correct),
        is_test=np.tile(test_flags, cfg.n_sessions),
    )
    _LOGGER.info(
        "dataset_generated",
        extra={
            "event": "dataset_generated",
            "sessions": cfg.n_sessions,
            "samples": dataset.n_samples,
            "seed": cfg.seed,
            "drift_angle": cfg.drift_angle,
        },
    )
    return dataset


__all__ = [
    "GenConfig",
    "baseline_level",
    "drift_phase",
    "generate",
    "noise_scale",
    "response_rate",
    "round_half_up",
    "signal_gain",
]
