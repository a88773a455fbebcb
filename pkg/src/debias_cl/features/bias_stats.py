"""Decline analysis: behavioural curves per session and per-window retrieval of fresh models."""

from __future__ import annotations

import logging
from dataclasses import dataclass, replace
from typing import Sequence

import numpy as np
from scipy import stats

from ..core.encoder import EncoderConfig, init_encoder
from ..core.errors import ConfigError, DatasetError
from ..core.types import SessionMeta, SessionRange
from ..infra.metrics import MetricsRecorder
from ..runtime.trainer import TrainConfig, build_step_data, derive_seed, train_step
from .retrieval import RetrievalConfig, evaluate_step
from .synth.dataset import Dataset

_LOGGER = logging.getLogger(__name__)


@dataclass(frozen=True)
class DeclineRow:
    index: int
    metric: str
    value: float


@dataclass(frozen=True)
class TrendFit:
    metric: str
    slope: float
    intercept: float
    spearman_rho: float
    ties: bool
    points: int


@dataclass(frozen=True)
class DeclineReport:
    rows: tuple[DeclineRow, ...]
    fits: tuple[TrendFit, ...]

    def fit(self, metric: str) -> TrendFit:
        for candidate in self.fits:
            if candidate.metric == metric:
                return candidate
        raise KeyError(metric)

    def series(self, metric: str) -> tuple[list[int], list[float]]:
        selected = [row for row in self.rows if row.metric == metric]
        return [row.index for row in selected], [row.value for row in selected]

    def metrics(self) -> tuple[str, ...]:
        return tuple(fit.metric for fit in self.fits)


def fit_trend(metric: str, index: Sequence[int], values: Sequence[float]) -> TrendFit:
    """Least-squares slope and Spearman rho; a constant series reports rho 0 with ``ties``."""

    xs = np.asarray(index, dtype=np.float64)
    ys = np.asarray(values, dtype=np.float64)
    if xs.size < 2:
        raise DatasetError(f"{metric}: need at least 2 points for a trend, got {xs.size}")
    if np.ptp(ys) == 0.0:
        return TrendFit(metric, 0.0, float(ys[0]), 0.0, True, int(xs.size))
    line = stats.linregress(xs, ys)
    rho = float(stats.spearmanr(xs, ys)[0])
    ties = False
    if np.isnan(rho):
        rho, ties = 0.0, True
    return TrendFit(metric, float(line.slope), float(line.intercept), rho, ties, int(xs.size))


def _report(series: dict[str, tuple[list[int], list[float]]]) -> DeclineReport:
    rows: list[DeclineRow] = []
    fits: list[TrendFit] = []
    for metric, (index, values) in series.items():
        rows.extend(DeclineRow(i, metric, v) for i, v in zip(index, values))
        fits.append(fit_trend(metric, index, values))
    return DeclineReport(rows=tuple(rows), fits=tuple(fits))


def behavioral_curves(metadata: Sequence[SessionMeta]) -> DeclineReport:
    if len(metadata) < 3:
        raise DatasetError(f"behavioral_curves needs at least 3 sessions, got {len(metadata)}")
    index = [meta.session_index for meta in metadata]
    return _report(
        {
            "response_accuracy": (index, [meta.response_accuracy for meta in metadata]),
            "consistency": (index, [meta.consistency for meta in metadata]),
            "activation_fraction": (index, [meta.activation_fraction for meta in metadata]),
        }
    )


def per_window_models(
    dataset: Dataset,
    encoder: EncoderConfig,
    train: TrainConfig,
    retrieval: RetrievalConfig,
    *,
    window_size: int = 5,
    metrics: MetricsRecorder | None = None,
    threads: int | None = 1,
) -> DeclineReport:
    """Train a fresh encoder on each ``window_size`` block and evaluate inside that block.

    Window ``k`` uses init and shuffle seeds derived from ``(seed, k)``.
    """

    sessions = dataset.header.n_sessions
    if window_size < 1 or sessions % window_size:
        raise ConfigError(
            f"{sessions} sessions do not split into windows of {window_size}", key="analyze.window_size"
        )
    names = {"brain_to_image": "top1_brain_to_image", "image_to_brain": "top1_image_to_brain"}
    series: dict[str, tuple[list[int], list[float]]] = {name: ([], []) for name in names.values()}
    for window in range(1, sessions // window_size + 1):
        span = SessionRange((window - 1) * window_size + 1, window * window_size)
        window_encoder = replace(encoder, init_seed=derive_seed(encoder.init_seed, window))
        window_train = replace(train, run_seed=derive_seed(train.run_seed, window))
        data = build_step_data(dataset, span, train.loss.bias)
        result = train_step(init_encoder(window_encoder), None, data, window_train, step_index=window, metrics=metrics)
        for row in evaluate_step(result.params, dataset, span, retrieval, step=window, threads=threads):
            index, values = series[names[row.direction.value]]
            index.append(window)
            values.append(row.top1)
        _LOGGER.info(
            "window_trained",
            extra={"event": "window_trained", "window": window, "range": span.label},
        )
    return _report(series)


__all__ = [
    "DeclineReport",
    "DeclineRow",
    "TrendFit",
    "behavioral_curves",
    "fit_trend",
    "per_window_models",
]
