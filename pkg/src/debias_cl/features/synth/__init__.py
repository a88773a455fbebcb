from __future__ import annotations

from .dataset import Dataset, DatasetHeader
from .generator import GenConfig, generate
from .stats import SessionStatsRow, format_digest, session_stats

__all__ = [
    "Dataset",
    "DatasetHeader",
    "GenConfig",
    "SessionStatsRow",
    "format_digest",
    "generate",
    "session_stats",
]
