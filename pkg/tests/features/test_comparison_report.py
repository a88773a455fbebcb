from __future__ import annotations

import pytest

from debias_cl.core.errors import DatasetError
from debias_cl.core.types import Direction, SessionRange
from debias_cl.features.report import RunRows, build_comparison, render_comparison
from debias_cl.features.retrieval import ReportRow


def _row(step: int, start: int, end: int, direction: Direction, top1: float) -> ReportRow:
    return ReportRow(
        step=step,
        eval_range=SessionRange(start, end),
        direction=direction,
        top1=top1,
        n_queries=10,
        n_way=5,
        trials=2,
        seed=0,
    )


def _both(step: int, start: int, end: int, b2i: float, i2b: float) -> tuple[ReportRow, ReportRow]:
    return (
        _row(step, start, end, Direction.BRAIN_TO_IMAGE, b2i),
        _row(step, start, end, Direction.IMAGE_TO_BRAIN, i2b),
    )


def _runs() -> list[RunRows]:
    incremental = RunRows("exp6_ours", "2+1", (*_both(1, 1, 2, 0.5, 0.4), *_both(2, 1, 3, 0.3, 0.2)))
    joint = RunRows("exp1_noncl", "3+0", _both(1, 1, 3, 0.6, 0.7))
    return [incremental, joint]


def test_columns_are_the_union_of_evaluated_ranges() -> None:
    table = build_comparison(_runs())
    assert table.columns == (SessionRange(1, 2), SessionRange(1, 3))
    assert table.header == ("method", "setting", "direction", "1-2", "1-3", "avg")
    assert table.setting == "2+1/3+0"


def test_rows_average_over_present_cells() -> None:
    table = build_comparison(_runs())
    ours = table.row("exp6_ours", Direction.BRAIN_TO_IMAGE)
    assert ours.values == (0.5, 0.3)
    assert ours.average == pytest.approx(0.4)
    joint = table.row("exp1_noncl", Direction.IMAGE_TO_BRAIN)
    assert joint.values == (None, 0.7)
    assert joint.average == pytest.approx(0.7)
    assert [row.direction for row in table.rows] == [
        Direction.BRAIN_TO_IMAGE,
        Direction.BRAIN_TO_IMAGE,
        Direction.IMAGE_TO_BRAIN,
        Direction.IMAGE_TO_BRAIN,
    ]
    with pytest.raises(KeyError):
        table.row("missing", Direction.BRAIN_TO_IMAGE)


def test_render_prints_percentages_and_gaps() -> None:
    text = render_comparison(build_comparison(_runs()))
    blocks = text.split("\n\n")
    assert len(blocks) == 2
    assert blocks[0].splitlines()[0] == "2+1/3+0 top-1 accuracy (%), brain_to_image"
    ours = next(line for line in blocks[0].splitlines() if line.startswith("exp6_ours"))
    assert ours.split()[1:] == ["2+1", "50.00", "30.00", "40.00"]
    joint = next(line for line in blocks[1].splitlines() if line.startswith("exp1_noncl"))
    assert joint.split()[1:] == ["3+0", "-", "70.00", "70.00"]


def test_rows_keep_the_setting_of_their_run() -> None:
    table = build_comparison(_runs())
    assert table.row("exp6_ours", Direction.IMAGE_TO_BRAIN).setting == "2+1"
    assert table.row("exp1_noncl", Direction.BRAIN_TO_IMAGE).setting == "3+0"
    header = render_comparison(table).splitlines()[1]
    assert header.split() == ["method", "setting", "1-2", "1-3", "avg"]


def test_invalid_inputs_are_rejected() -> None:
    with pytest.raises(DatasetError):
        build_comparison([])
    with pytest.raises(DatasetError):
        build_comparison([RunRows("empty", "1+1", ())])
    one_sided = RunRows("half", "1+1", (_row(1, 1, 1, Direction.BRAIN_TO_IMAGE, 0.5),))
    with pytest.raises(DatasetError):
        build_comparison([one_sided])
