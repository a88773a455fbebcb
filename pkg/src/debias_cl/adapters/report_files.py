"""Machine-readable run artifacts: retrieval report CSV (+ JSON mirror), loss history,
decline analysis, comparison tables and JSON documents such as the run manifest."""

from __future__ import annotations

import csv
import io
import json
import logging
from dataclasses import asdict
from pathlib import Path
from typing import Any, Iterable, Mapping, Sequence

from ..core.errors import DatasetFormatError, DomainError
from ..core.types import Direction, SessionRange
from ..features.bias_stats import DeclineReport
from ..features.report import ComparisonTable
from ..features.retrieval import ReportRow
from ..features.synth.dataset import Dataset
from ..features.synth.stats import SessionStatsRow
from ._binary import structured_log, write_atomic

_LOGGER = logging.getLogger(__name__)

REPORT_HEADER = ("step", "range_start", "range_end", "direction", "top1", "n_queries", "n_way", "trials", "seed")
LOSS_HEADER = ("step", "epoch", "loss")
DECLINE_HEADER = ("index", "metric", "value")


def _csv_bytes(header: Sequence[str], records: Iterable[Sequence[object]]) -> bytes:
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(records)
    return buffer.getvalue().encode("utf-8")


def write_json(path: str | Path, payload: Mapping[str, Any] | Sequence[Any]) -> Path:
    target = Path(path)
    text = json.dumps(payload, indent=2, sort_keys=True, ensure_ascii=False, default=str)
    write_atomic(target, (text + "\n").encode("utf-8"))
    return target


def read_json(path: str | Path) -> Any:
    source = Path(path)
    try:
        return json.loads(source.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise DatasetFormatError(f"{source}: invalid JSON at line {exc.lineno}: {exc.msg}") from exc


def _report_record(row: ReportRow) -> tuple[object, ...]:
    return (
        row.step,
        row.eval_range.start,
        row.eval_range.end,
        row.direction.value,
        f"{row.top1:.6f}",
        row.n_queries,
        row.n_way,
        row.trials,
        row.seed,
    )


def write_report(rows: Sequence[ReportRow], path: str | Path) -> tuple[Path, Path]:
    """Write ``report.csv`` and its JSON mirror next to it; returns both paths."""

    csv_path = Path(path)
    write_atomic(csv_path, _csv_bytes(REPORT_HEADER, (_report_record(row) for row in rows)))
    mirror = [
        {
            "step": row.step,
            "range_start": row.eval_range.start,
            "range_end": row.eval_range.end,
            "direction": row.direction.value,
            "top1": row.top1,
            "correct": row.correct,
            "n_queries": row.n_queries,
            "n_way": row.n_way,
            "trials": row.trials,
            "seed": row.seed,
        }
        for row in rows
    ]
    json_path = write_json(csv_path.with_suffix(".json"), mirror)
    structured_log(_LOGGER, logging.INFO, event="report_written", adapter="report_files", path=str(csv_path), rows=len(rows))
    return csv_path, json_path


def read_report(path: str | Path) -> tuple[ReportRow, ...]:
    source = Path(path)
    with source.open("r", encoding="utf-8", newline="") as handle:
        reader = csv.DictReader(handle)
        if tuple(reader.fieldnames or ()) != REPORT_HEADER:
            raise DatasetFormatError(f"{source}: unexpected report header {reader.fieldnames}")
        rows: list[ReportRow] = []
        for line_no, record in enumerate(reader, start=2):
            try:
                n_queries = int(record["n_queries"])
                trials = int(record["trials"])
                top1 = float(record["top1"])
                rows.append(
                    ReportRow(
                        step=int(record["step"]),
                        eval_range=SessionRange(int(record["range_start"]), int(record["range_end"])),
                        direction=Direction(record["direction"]),
                        top1=top1,
                        n_queries=n_queries,
                        n_way=int(record["n_way"]),
                        trials=trials,
                        seed=int(record["seed"]),
                        correct=round(top1 * n_queries * trials),
                    )
                )
            except (TypeError, ValueError, DomainError) as exc:
                raise DatasetFormatError(f"{source}: line {line_no}: {exc}") from exc
    return tuple(rows)


def write_losses(history: Sequence[tuple[int, Sequence[float]]], path: str | Path) -> Path:
    target = Path(path)
    records = ((step, epoch, repr(float(loss))) for step, losses in history for epoch, loss in enumerate(losses))
    write_atomic(target, _csv_bytes(LOSS_HEADER, records))
    return target


def write_decline(report: DeclineReport, csv_path: str | Path, json_path: str | Path) -> tuple[Path, Path]:
    """Rows as ``index,metric,value`` and the fitted trends as a JSON summary."""

    table = Path(csv_path)
    write_atomic(table, _csv_bytes(DECLINE_HEADER, ((row.index, row.metric, f"{row.value:.6f}") for row in report.rows)))
    summary = {fit.metric: {key: value for key, value in asdict(fit).items() if key != "metric"} for fit in report.fits}
    return table, write_json(json_path, summary)


def write_comparison(table: ComparisonTable, path: str | Path) -> Path:
    target = Path(path)
    records = (
        (
            row.method,
            row.setting,
            row.direction.value,
            *("" if value is None else f"{value:.6f}" for value in row.values),
            f"{row.average:.6f}",
        )
        for row in table.rows
    )
    write_atomic(target, _csv_bytes(table.header, records))
    structured_log(_LOGGER, logging.INFO, event="comparison_written", adapter="report_files", path=str(target))
    return target


def dataset_summary(dataset: Dataset, stats: Sequence[SessionStatsRow]) -> dict[str, Any]:
    header = dataset.header
    return {
        "n_sessions": header.n_sessions,
        "samples_per_session": header.samples_per_session,
        "fmri_dim": header.fmri_dim,
        "embed_dim": header.embed_dim,
        "test_fraction": header.test_fraction,
        "seed": header.seed,
        "n_samples": dataset.n_samples,
        "sessions": [
            {
                "session": meta.session_index,
                "response_accuracy": meta.response_accuracy,
                "consistency": meta.consistency,
                "activation_fraction": meta.activation_fraction,
                "empirical_response_accuracy": row.response_accuracy,
                "empirical_activation_fraction": row.activation_fraction,
                "samples": row.samples,
            }
            for meta, row in zip(dataset.sessions, stats)
        ],
    }


__all__ = [
    "DECLINE_HEADER",
    "LOSS_HEADER",
    "REPORT_HEADER",
    "dataset_summary",
    "read_json",
    "read_report",
    "write_comparison",
    "write_decline",
    "write_json",
    "write_losses",
    "write_report",
]
