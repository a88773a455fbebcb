"""Static SVG charts; silently skipped when matplotlib (extra ``plot``) is missing."""

from __future__ import annotations

import logging
from pathlib import Path
from typing import Any, Sequence

from ..core.types import Direction
from ..features.bias_stats import DeclineReport
from ..features.retrieval import ReportRow
from ._binary import structured_log

plt: Any = None
try:  # pragma: no cover - optional dependency
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as _plt

    plt = _plt
except ModuleNotFoundError:  # pragma: no cover - optional dependency
    pass

_LOGGER = logging.getLogger(__name__)

# fixed ids and no timestamp so identical inputs give identical files
_SVG_PARAMS = {"svg.hashsalt": "debias-cl", "svg.fonttype": "none"}


def _save(figure: Any, path: Path) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    figure.savefig(path, format="svg", metadata={"Date": None})
    plt.close(figure)
    structured_log(_LOGGER, logging.INFO, event="plot_written", adapter="plots", path=str(path))
    return path


def write_decline_svg(report: DeclineReport, path: str | Path, *, title: str = "") -> Path | None:
    if plt is None:
        structured_log(_LOGGER, logging.DEBUG, event="plot_skipped", adapter="plots", reason="matplotlib missing")
        return None
    with plt.rc_context(_SVG_PARAMS):
        figure, axis = plt.subplots(figsize=(6.0, 3.5))
        for metric in report.metrics():
            index, values = report.series(metric)
            fit = report.fit(metric)
            axis.plot(index, values, marker="o", label=f"{metric} (rho={fit.spearman_rho:.2f})")
        axis.set_xlabel("index")
        axis.set_ylabel("value")
        if title:
            axis.set_title(title)
        axis.legend(fontsize="small")
        figure.tight_layout()
        return _save(figure, Path(path))


def write_accuracy_svg(rows: Sequence[ReportRow], path: str | Path, *, title: str = "") -> Path | None:
    if plt is None:
        structured_log(_LOGGER, logging.DEBUG, event="plot_skipped", adapter="plots", reason="matplotlib missing")
        return None
    with plt.rc_context(_SVG_PARAMS):
        figure, axis = plt.subplots(figsize=(6.0, 3.5))
        for direction in (Direction.BRAIN_TO_IMAGE, Direction.IMAGE_TO_BRAIN):
            selected = [row for row in rows if row.direction is direction]
            axis.plot(
                [row.eval_range.label for row in selected],
                [row.top1 for row in selected],
                marker="o",
                label=direction.value,
            )
        axis.set_xlabel("evaluated sessions")
        axis.set_ylabel("top-1 accuracy")
        axis.set_ylim(0.0, 1.0)
        if title:
            axis.set_title(title)
        axis.legend(fontsize="small")
        figure.tight_layout()
        return _save(figure, Path(path))


__all__ = ["write_accuracy_svg", "write_decline_svg"]
