"""N-way top-1 retrieval in both directions.

Each (seed, trial, query sample id) owns an independent Philox stream, so results do not
depend on query order, gallery row order or whether trials run on worker threads.
"""

from __future__ import annotations

import logging
import os
from dataclasses import dataclass
from functools import partial
from typing import Sequence

import anyio
import anyio.to_thread
import numpy as np

from ..core.encoder import EncoderParams, forward
from ..core.errors import ConfigError, DimensionError, EmptyTestSetError
from ..core.types import Direction, SessionRange, Split
from .synth.dataset import Dataset

_LOGGER = logging.getLogger(__name__)

THREADS_ENV = "DEBIAS_CL_THREADS"


@dataclass(frozen=True)
class RetrievalConfig:
    n_way: int = 50
    trials: int = 30
    direction: Direction = Direction.BRAIN_TO_IMAGE
    seed: int = 0

    def __post_init__(self) -> None:
        if isinstance(self.n_way, bool) or not isinstance(self.n_way, int) or self.n_way < 2:
            raise ConfigError(f"must be an integer >= 2, got {self.n_way!r}", key="retrieval.n_way")
        if isinstance(self.trials, bool) or not isinstance(self.trials, int) or self.trials < 1:
            raise ConfigError(f"must be a positive integer, got {self.trials!r}", key="retrieval.trials")
        if not 0 <= self.seed < 2**64:
            raise ConfigError("must fit in 64 bits", key="retrieval.seed")
        object.__setattr__(self, "direction", Direction(self.direction))


@dataclass(frozen=True)
class ReportRow:
    step: int
    eval_range: SessionRange
    direction: Direction
    top1: float
    n_queries: int
    n_way: int
    trials: int
    seed: int
    correct: int = 0


def _normalized(rows: np.ndarray) -> np.ndarray:
    return rows / np.linalg.norm(rows, axis=1, keepdims=True)


def _check_inputs(queries: np.ndarray, gallery: np.ndarray, truth: np.ndarray, n_way: int) -> None:
    if queries.ndim != 2 or gallery.ndim != 2 or queries.shape[1] != gallery.shape[1]:
        raise DimensionError("queries and gallery must share the embedding width", queries.shape, gallery.shape)
    if truth.shape != (queries.shape[0],):
        raise DimensionError("one truth index per query", truth.shape, (queries.shape[0],))
    if truth.size and (truth.min() < 0 or truth.max() >= gallery.shape[0]):
        raise DimensionError("truth index outside the gallery", truth.shape, gallery.shape)
    if n_way > gallery.shape[0]:
        raise ConfigError(f"n_way={n_way} exceeds gallery size {gallery.shape[0]}", key="retrieval.n_way")


def _trial_correct(
    q_hat: np.ndarray,
    g_hat: np.ndarray,
    truth: np.ndarray,
    query_ids: np.ndarray,
    gallery_ids: np.ndarray,
    n_way: int,
    seed: int,
    trial: int,
) -> int:
    # gallery rows in ascending sample-id order: sampling and tie-breaking follow ids, not storage order
    by_id = np.argsort(gallery_ids, kind="stable")
    position_of = np.empty_like(by_id)
    position_of[by_id] = np.arange(by_id.size)
    hits = 0
    for row in range(q_hat.shape[0]):
        rng = np.random.Generator(np.random.Philox(np.random.SeedSequence([seed, trial, int(query_ids[row])])))
        true_pos = int(position_of[truth[row]])
        picks = rng.choice(by_id.size - 1, size=n_way - 1, replace=False)
        picks = picks + (picks >= true_pos)
        candidates = np.sort(np.append(picks, true_pos))
        scores = g_hat[by_id[candidates]] @ q_hat[row]
        # argmax returns the first maximum, i.e. the lowest candidate id
        if candidates[int(np.argmax(scores))] == true_pos:
            hits += 1
    return hits


def _resolve_threads(threads: int | None) -> int:
    if threads is None:
        raw = os.environ.get(THREADS_ENV, "0").strip() or "0"
        try:
            threads = int(raw)
        except ValueError as exc:
            raise ConfigError(f"must be an integer, got {raw!r}", key=THREADS_ENV) from exc
    if threads < 0:
        raise ConfigError(f"must be >= 0, got {threads}", key=THREADS_ENV)
    if threads == 0:
        threads = min(8, os.cpu_count() or 1)
    return threads


async def _trials_threaded(worker: partial[int], trials: int, threads: int) -> list[int]:
    limiter = anyio.CapacityLimiter(threads)
    results = [0] * trials

    async def run_one(trial: int) -> None:
        results[trial] = await anyio.to_thread.run_sync(worker, trial, limiter=limiter)

    async with anyio.create_task_group() as group:
        for trial in range(trials):
            group.start_soon(run_one, trial)
    return results


def count_correct(
    queries: np.ndarray,
    gallery: np.ndarray,
    truth: Sequence[int] | np.ndarray,
    cfg: RetrievalConfig,
    *,
    query_ids: np.ndarray | None = None,
    gallery_ids: np.ndarray | None = None,
    threads: int | None = 1,
) -> int:
    """Total top-1 hits over all queries and trials.

    ``threads`` other than 1 runs trials on worker threads (``None`` reads ``DEBIAS_CL_THREADS``).
    """

    q = np.asarray(queries, dtype=np.float64)
    g = np.asarray(gallery, dtype=np.float64)
    t = np.asarray(truth, dtype=np.int64)
    _check_inputs(q, g, t, cfg.n_way)
    q_ids = np.arange(q.shape[0]) if query_ids is None else np.asarray(query_ids, dtype=np.int64)
    g_ids = np.arange(g.shape[0]) if gallery_ids is None else np.asarray(gallery_ids, dtype=np.int64)
    worker = partial(_trial_correct, _normalized(q), _normalized(g), t, q_ids, g_ids, cfg.n_way, cfg.seed)
    workers = _resolve_threads(threads)
    if workers == 1 or cfg.trials == 1:
        per_trial = [worker(trial) for trial in range(cfg.trials)]
    else:
        per_trial = anyio.run(_trials_threaded, worker, cfg.trials, workers)
    return int(sum(per_trial))


def nway_retrieval(
    queries: np.ndarray,
    gallery: np.ndarray,
    truth: Sequence[int] | np.ndarray,
    cfg: RetrievalConfig,
    *,
    query_ids: np.ndarray | None = None,
    gallery_ids: np.ndarray | None = None,
    threads: int | None = 1,
) -> float:
    if len(queries) == 0:
        raise EmptyTestSetError("nway_retrieval needs at least one query")
    hits = count_correct(
        queries, gallery, truth, cfg, query_ids=query_ids, gallery_ids=gallery_ids, threads=threads
    )
    return hits / (len(queries) * cfg.trials)


def embed(params: EncoderParams, x: np.ndarray) -> np.ndarray:
    return forward(params, x, record_gradients=False).output.numpy()


def evaluate_step(
    params: EncoderParams,
    dataset: Dataset,
    eval_range: SessionRange,
    cfg: RetrievalConfig,
    *,
    step: int = 1,
    threads: int | None = 1,
) -> tuple[ReportRow, ReportRow]:
    """Brain-to-image and image-to-brain rows on the test samples inside ``eval_range``."""

    ids = dataset.indices(eval_range, Split.TEST)
    if ids.size == 0:
        raise EmptyTestSetError(f"no test samples in sessions {eval_range.label}")
    brain = embed(params, dataset.x[ids])
    images = dataset.c[ids]
    truth = np.arange(ids.size)
    rows: list[ReportRow] = []
    for direction in (Direction.BRAIN_TO_IMAGE, Direction.IMAGE_TO_BRAIN):
        queries, gallery = (brain, images) if direction is Direction.BRAIN_TO_IMAGE else (images, brain)
        run_cfg = RetrievalConfig(n_way=cfg.n_way, trials=cfg.trials, direction=direction, seed=cfg.seed)
        hits = count_correct(queries, gallery, truth, run_cfg, query_ids=ids, gallery_ids=ids, threads=threads)
        top1 = hits / (ids.size * cfg.trials)
        rows.append(
            ReportRow(
                step=step,
                eval_range=eval_range,
                direction=direction,
                top1=top1,
                n_queries=int(ids.size),
                n_way=cfg.n_way,
                trials=cfg.trials,
                seed=cfg.seed,
                correct=hits,
            )
        )
        _LOGGER.info(
            "retrieval_evaluated",
            extra={
                "event": "retrieval_evaluated",
                "step": step,
                "range": eval_range.label,
                "direction": direction.value,
                "top1": top1,
                "queries": int(ids.size),
            },
        )
    return rows[0], rows[1]


__all__ = [
    "THREADS_ENV",
    "ReportRow",
    "RetrievalConfig",
    "count_correct",
    "embed",
    "evaluate_step",
    "nway_retrieval",
]
