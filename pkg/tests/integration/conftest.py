from __future__ import annotations

from pathlib import Path

import pytest

from tests.helpers import TINY_DOCUMENT, write_config


@pytest.fixture
def tiny_config(tmp_path: Path) -> Path:
    return write_config(tmp_path / "tiny.json", TINY_DOCUMENT)
