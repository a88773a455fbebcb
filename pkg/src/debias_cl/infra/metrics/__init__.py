from __future__ import annotations

from .service import (
    CounterSnapshot,
    MetricsRecorder,
    MetricsService,
    MetricsSnapshot,
    NullMetricsRecorder,
    ObservationSnapshot,
)

__all__ = [
    "CounterSnapshot",
    "MetricsRecorder",
    "MetricsService",
    "MetricsSnapshot",
    "NullMetricsRecorder",
    "ObservationSnapshot",
]
