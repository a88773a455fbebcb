"""複数ランの検索精度を (手法 × セッション範囲) の比較表へ整形する."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

from ..core.errors import DatasetError
from ..core.types import Direction, SessionRange
from .retrieval import ReportRow


@dataclass(frozen=True)
class RunRows:
    """1 ラン分の報告行と、その表示名."""

    method: str
    setting: str
    rows: tuple[ReportRow, ...]


@dataclass(frozen=True)
class ComparisonRow:
    method: str
    setting: str
    direction: Direction
    values: tuple[float | None, ...]
    average: float


@dataclass(frozen=True)
class ComparisonTable:
    setting: str
    columns: tuple[SessionRange, ...]
    rows: tuple[ComparisonRow, ...]

    @property
    def header(self) -> tuple[str, ...]:
        return ("method", "setting", "direction", *(column.label for column in self.columns), "avg")

    def row(self, method: str, direction: Direction) -> ComparisonRow:
        for candidate in self.rows:
            if candidate.method == method and candidate.direction is direction:
                return candidate
        raise KeyError((method, direction.value))


def _columns(runs: Sequence[RunRows]) -> tuple[SessionRange, ...]:
    ranges = {row.eval_range for run in runs for row in run.rows}
    return tuple(sorted(ranges, key=lambda span: (span.end, span.start)))


def build_comparison(runs: Sequence[RunRows]) -> ComparisonTable:
    """Pivot report rows so each method is one row and each evaluated range one column.

    Each row carries the protocol setting of its run. The ``avg`` column is the mean over
    the ranges a run actually evaluated; ranges a run never reached (a joint run next to
    incremental ones) stay empty.
    """

    if not runs:
        raise DatasetError("no runs to compare")
    for run in runs:
        if not run.rows:
            raise DatasetError(f"run {run.method!r} has no report rows")
    settings = sorted({run.setting for run in runs})
    columns = _columns(runs)
    rows: list[ComparisonRow] = []
    for direction in (Direction.BRAIN_TO_IMAGE, Direction.IMAGE_TO_BRAIN):
        for run in runs:
            cells: dict[SessionRange, float] = {}
            for row in run.rows:
                if row.direction is direction:
                    cells[row.eval_range] = row.top1
            if not cells:
                raise DatasetError(f"run {run.method!r} has no {direction.value} rows")
            values = tuple(cells.get(column) for column in columns)
            present = [value for value in values if value is not None]
            rows.append(ComparisonRow(run.method, run.setting, direction, values, sum(present) / len(present)))
    return ComparisonTable(setting="/".join(settings), columns=columns, rows=tuple(rows))


def _cells(values: Sequence[float | None]) -> str:
    return "".join(f"{'-':>9}" if value is None else f"{value * 100.0:>9.2f}" for value in values)


def render_comparison(table: ComparisonTable) -> str:
    header_cells = "".join(f"{label:>9}" for label in (*(c.label for c in table.columns), "avg"))
    blocks: list[str] = []
    for direction in (Direction.BRAIN_TO_IMAGE, Direction.IMAGE_TO_BRAIN):
        lines = [
            f"{table.setting} top-1 accuracy (%), {direction.value}",
            f"{'method':<24}{'setting':<10}{header_cells}",
        ]
        for row in table.rows:
            if row.direction is direction:
                lines.append(f"{row.method:<24}{row.setting:<10}{_cells((*row.values, row.average))}")
        blocks.append("\n".join(lines))
    return "\n\n".join(blocks)


__all__ = [
    "ComparisonRow",
    "ComparisonTable",
    "RunRows",
    "build_comparison",
    "render_comparison",
]
