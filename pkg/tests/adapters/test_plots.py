from __future__ import annotations

from pathlib import Path

import pytest

from debias_cl.adapters import plots
from debias_cl.core.types import Direction, SessionRange
from debias_cl.features.bias_stats import behavioral_curves
from debias_cl.features.retrieval import ReportRow
from debias_cl.features.synth import generate
from tests.helpers import small_gen_config


def _rows() -> list[ReportRow]:
    return [
        ReportRow(step, SessionRange(1, 2 * step), direction, top1, 10 * step, 5, 2, 7)
        for step, top1 in ((1, 0.8), (2, 0.6))
        for direction in (Direction.BRAIN_TO_IMAGE, Direction.IMAGE_TO_BRAIN)
    ]


def test_missing_matplotlib_skips_charts(tmp_path: Path, monkeypatch) -> None:
    monkeypatch.setattr(plots, "plt", None)
    assert plots.write_accuracy_svg(_rows(), tmp_path / "accuracy.svg") is None
    assert not (tmp_path / "accuracy.svg").exists()


def test_charts_are_written_and_stable(tmp_path: Path) -> None:
    pytest.importorskip("matplotlib")
    first = plots.write_accuracy_svg(_rows(), tmp_path / "a" / "accuracy.svg", title="run")
    second = plots.write_accuracy_svg(_rows(), tmp_path / "b" / "accuracy.svg", title="run")
    assert first is not None and second is not None
    assert first.read_bytes().lstrip().startswith(b"<?xml")
    assert first.read_bytes() == second.read_bytes()

    report = behavioral_curves(generate(small_gen_config()).sessions)
    decline = plots.write_decline_svg(report, tmp_path / "behavior.svg", title="session metadata")
    assert decline is not None and b"<svg" in decline.read_bytes()
