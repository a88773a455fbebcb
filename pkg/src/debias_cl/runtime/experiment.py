"""Run directories: dataset generation, protocol runs and decline analysis written to disk.

A run directory holds ``config.json`` (the fully resolved spec), ``report.csv`` with its
JSON mirror, ``losses.csv``, one checkpoint per step under ``checkpoints/`` and
``manifest.json`` tying them together.
"""

from __future__ import annotations

import logging
import zlib
from dataclasses import dataclass
from datetime import datetime, timezone
from pathlib import Path
from typing import Any, Mapping

from .. import __version__
from ..adapters.checkpoint import save_checkpoint
from ..adapters.dataset_file import encode_dataset, read_dataset, write_dataset
from ..adapters.plots import write_accuracy_svg, write_decline_svg
from ..adapters.report_files import (
    dataset_summary,
    read_json,
    read_report,
    write_decline,
    write_json,
    write_losses,
    write_report,
)
from ..config.specs import RunSpec, parse_run_spec
from ..core.errors import DatasetError, HeaderMismatchError
from ..features.bias_stats import DeclineReport, behavioral_curves, per_window_models
from ..features.report import RunRows
from ..features.synth import Dataset, SessionStatsRow, generate, session_stats
from ..infra.metrics import MetricsService
from .runner import StepOutcome, run_protocol

_LOGGER = logging.getLogger(__name__)

MANIFEST_NAME = "manifest.json"
MANIFEST_FORMAT = 1


@dataclass(frozen=True)
class RunArtifacts:
    out_dir: Path
    manifest: Path
    report: Path
    report_json: Path
    losses: Path
    checkpoints: tuple[Path, ...]
    plot: Path | None = None


@dataclass(frozen=True)
class AnalysisArtifacts:
    behavior: DeclineReport
    windows: DeclineReport | None
    files: tuple[Path, ...]


def dataset_fingerprint(dataset: Dataset) -> str:
    return f"{zlib.crc32(encode_dataset(dataset)):08x}"


def write_generated_dataset(spec: RunSpec, out_dir: Path) -> tuple[Path, tuple[SessionStatsRow, ...]]:
    """``dataset.vbcl`` plus a ``dataset.json`` summary with per-session rates."""

    dataset = generate(spec.data)
    path = write_dataset(dataset, out_dir / "dataset.vbcl")
    stats = session_stats(dataset)
    write_json(out_dir / "dataset.json", dataset_summary(dataset, stats))
    return path, stats


def load_or_generate(spec: RunSpec, dataset_path: Path | None) -> Dataset:
    if dataset_path is None:
        return generate(spec.data)
    dataset = read_dataset(dataset_path, expect_dims=(spec.data.fmri_dim, spec.data.embed_dim))
    if dataset.header.n_sessions != spec.data.n_sessions:
        raise HeaderMismatchError(
            f"{dataset_path}: file holds {dataset.header.n_sessions} sessions; config expects {spec.data.n_sessions}"
        )
    return dataset


def execute_run(
    spec: RunSpec,
    out_dir: Path,
    *,
    dataset: Dataset | None = None,
    dataset_path: Path | None = None,
    threads: int | None = None,
    plots: bool = True,
) -> RunArtifacts:
    data = dataset if dataset is not None else load_or_generate(spec, dataset_path)
    metrics = MetricsService()
    checkpoints: list[Path] = []
    steps: list[dict[str, Any]] = []

    def on_step(outcome: StepOutcome) -> None:
        index = outcome.plan.index
        path = save_checkpoint(outcome.params, index, out_dir / "checkpoints" / f"step_{index:02d}.brnc")
        checkpoints.append(path)
        steps.append(
            {
                "step": index,
                "sessions": outcome.plan.sessions.label,
                "eval_range": outcome.plan.eval_range.label,
                "checkpoint": path.relative_to(out_dir).as_posix(),
                "rehearsal_samples": outcome.rehearsal_size,
                "final_loss": outcome.epoch_losses[-1],
            }
        )

    run = run_protocol(
        data,
        spec.protocol,
        spec.encoder,
        spec.train,
        spec.retrieval,
        metrics=metrics,
        on_step=on_step,
        threads=threads,
    )
    report, report_json = write_report(run.rows, out_dir / "report.csv")
    losses = write_losses([(step.plan.index, step.epoch_losses) for step in run.steps], out_dir / "losses.csv")
    write_json(out_dir / "config.json", spec.to_dict())
    plot = write_accuracy_svg(run.rows, out_dir / "accuracy.svg", title=spec.name) if plots else None
    manifest = {
        "format": MANIFEST_FORMAT,
        "version": __version__,
        "created_at": datetime.now(timezone.utc).isoformat(),
        "complete": True,
        "name": spec.name,
        "method": spec.method,
        "preset": spec.preset,
        "protocol": {
            "n_init": spec.protocol.n_init,
            "n_step": spec.protocol.n_step,
            "n_sessions": spec.protocol.n_sessions,
            "label": spec.protocol.label,
            "steps": spec.protocol.step_count,
        },
        "seeds": {
            "data": spec.data.seed,
            "init": spec.encoder.init_seed,
            "run": spec.train.run_seed,
            "retrieval": spec.retrieval.seed,
        },
        "dataset": {
            "source": "generated" if dataset_path is None else str(dataset_path),
            "fingerprint": dataset_fingerprint(data),
        },
        "config": spec.to_dict(),
        "overrides": dict(spec.overrides),
        "steps": steps,
        "report": report.name,
        "report_json": report_json.name,
        "losses": losses.name,
        "plot": None if plot is None else plot.name,
        "metrics": metrics.collect_snapshot().to_summary(),
    }
    manifest_path = write_json(out_dir / MANIFEST_NAME, manifest)
    _LOGGER.info(
        "run_written",
        extra={"event": "run_written", "out_dir": str(out_dir), "steps": len(run.steps), "run_name": spec.name},
    )
    return RunArtifacts(
        out_dir=out_dir,
        manifest=manifest_path,
        report=report,
        report_json=report_json,
        losses=losses,
        checkpoints=tuple(checkpoints),
        plot=plot,
    )


def load_manifest(run_dir: Path) -> Mapping[str, Any]:
    manifest = read_json(run_dir / MANIFEST_NAME)
    if not isinstance(manifest, Mapping) or not manifest.get("complete"):
        raise DatasetError(f"{run_dir}: incomplete run (no finished manifest)")
    return manifest


def load_run_rows(run_dir: Path) -> RunRows:
    manifest = load_manifest(run_dir)
    rows = read_report(run_dir / str(manifest["report"]))
    expected = int(manifest["protocol"]["steps"]) * 2
    if len(rows) != expected:
        raise DatasetError(f"{run_dir}: report has {len(rows)} rows, manifest promises {expected}")
    protocol = manifest["protocol"]
    # a single step over every session is the joint (non-continual) setting
    joint = int(protocol["n_init"]) == int(protocol["n_sessions"])
    setting = "joint" if joint else str(protocol["label"])
    return RunRows(method=str(manifest["name"]), setting=setting, rows=rows)


def load_run_spec(run_dir: Path) -> RunSpec:
    return parse_run_spec(read_json(run_dir / "config.json"))


def execute_analysis(
    spec: RunSpec,
    dataset: Dataset,
    out_dir: Path,
    *,
    windows: bool = True,
    threads: int | None = None,
    plots: bool = True,
) -> AnalysisArtifacts:
    """Behavioural curves from session metadata, then optionally one fresh model per window."""

    behavior = behavioral_curves(dataset.sessions)
    files = list(write_decline(behavior, out_dir / "behavior.csv", out_dir / "behavior.json"))
    if plots:
        chart = write_decline_svg(behavior, out_dir / "behavior.svg", title="session metadata")
        if chart is not None:
            files.append(chart)
    window_report: DeclineReport | None = None
    if windows:
        window_report = per_window_models(
            dataset,
            spec.encoder,
            spec.train,
            spec.retrieval,
            window_size=spec.window_size,
            threads=threads,
        )
        files.extend(write_decline(window_report, out_dir / "windows.csv", out_dir / "windows.json"))
        if plots:
            chart = write_decline_svg(window_report, out_dir / "windows.svg", title=f"windows of {spec.window_size}")
            if chart is not None:
                files.append(chart)
    return AnalysisArtifacts(behavior=behavior, windows=window_report, files=tuple(files))


__all__ = [
    "AnalysisArtifacts",
    "MANIFEST_NAME",
    "RunArtifacts",
    "dataset_fingerprint",
    "execute_analysis",
    "execute_run",
    "load_manifest",
    "load_or_generate",
    "load_run_rows",
    "load_run_spec",
    "write_generated_dataset",
]
