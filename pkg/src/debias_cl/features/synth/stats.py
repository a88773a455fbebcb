from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ...core.errors import DatasetError, EmptySessionError
from .dataset import Dataset


@dataclass(frozen=True)
class SessionStatsRow:
    session_index: int
    response_accuracy: float
    consistency: float
    activation_fraction: float
    samples: int


def session_stats(dataset: Dataset) -> tuple[SessionStatsRow, ...]:
    """Empirical per-session means; ``consistency`` is taken from the session record."""

    if dataset.n_samples == 0:
        raise DatasetError("session_stats needs a non-empty dataset")
    rows: list[SessionStatsRow] = []
    for meta in dataset.sessions:
        selected = dataset.session == meta.session_index
        count = int(np.count_nonzero(selected))
        if count == 0:
            raise EmptySessionError(f"session {meta.session_index} has no samples")
        rows.append(
            SessionStatsRow(
                session_index=meta.session_index,
                response_accuracy=float(np.mean(dataset.response_correct[selected])),
                consistency=meta.consistency,
                activation_fraction=float(np.mean(dataset.x[selected] > 0.0)),
                samples=count,
            )
        )
    return tuple(rows)


def format_digest(rows: tuple[SessionStatsRow, ...]) -> str:
    lines = ["session  accuracy  consistency  activation"]
    for row in rows:
        lines.append(
            f"{row.session_index:>7}  {row.response_accuracy:8.3f}  {row.consistency:11.3f}  {row.activation_fraction:10.3f}"
        )
    return "\n".join(lines)


__all__ = ["SessionStatsRow", "format_digest", "session_stats"]
