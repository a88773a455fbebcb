from __future__ import annotations

from .checkpoint import Checkpoint, load_checkpoint, save_checkpoint
from .dataset_file import read_dataset, write_dataset
from .report_files import read_report, write_json, write_report

__all__ = [
    "Checkpoint",
    "load_checkpoint",
    "read_dataset",
    "read_report",
    "save_checkpoint",
    "write_dataset",
    "write_json",
    "write_report",
]
