from __future__ import annotations

import json
import logging
from pathlib import Path

import numpy as np
import pytest

from debias_cl.adapters.dataset_file import encode_dataset, read_dataset, write_dataset
from debias_cl.core.errors import (
    BadMagicError,
    ChecksumError,
    DatasetFormatError,
    HeaderMismatchError,
    TruncatedFileError,
    VersionMismatchError,
)
from debias_cl.features.synth import generate
from tests.helpers import small_gen_config


@pytest.fixture
def dataset_path(tmp_path: Path) -> Path:
    return write_dataset(generate(small_gen_config()), tmp_path / "data" / "dataset.vbcl")


def _corrupt(path: Path, edit) -> Path:
    data = bytearray(path.read_bytes())
    target = path.with_name("corrupt.vbcl")
    target.write_bytes(bytes(edit(data)))
    return target


def test_written_dataset_reads_back(dataset_path: Path) -> None:
    original = generate(small_gen_config())
    loaded = read_dataset(dataset_path, expect_dims=(12, 4))
    assert loaded.header == original.header
    assert loaded.sessions == original.sessions
    for column in ("x", "c", "session", "response_correct", "is_test"):
        np.testing.assert_array_equal(getattr(loaded, column), getattr(original, column))
    assert dataset_path.read_bytes() == encode_dataset(original)


def test_write_logs_a_structured_event(tmp_path: Path, caplog) -> None:
    with caplog.at_level(logging.INFO, logger="debias_cl.adapters.dataset_file"):
        write_dataset(generate(small_gen_config()), tmp_path / "d.vbcl")
    payload = json.loads(caplog.records[-1].getMessage())
    assert payload["event"] == "dataset_written"
    assert payload["adapter"] == "vbcl"
    assert payload["samples"] == 120


def test_bad_magic(dataset_path: Path) -> None:
    def edit(data: bytearray) -> bytearray:
        data[:4] = b"NOPE"
        return data

    with pytest.raises(BadMagicError):
        read_dataset(_corrupt(dataset_path, edit))


def test_empty_file_is_bad_magic(tmp_path: Path) -> None:
    empty = tmp_path / "empty.vbcl"
    empty.write_bytes(b"")
    with pytest.raises(BadMagicError):
        read_dataset(empty)


def test_version_mismatch(dataset_path: Path) -> None:
    def edit(data: bytearray) -> bytearray:
        data[4:6] = (9).to_bytes(2, "little")
        return data

    with pytest.raises(VersionMismatchError):
        read_dataset(_corrupt(dataset_path, edit))


def test_truncated_payload(dataset_path: Path) -> None:
    with pytest.raises(TruncatedFileError):
        read_dataset(_corrupt(dataset_path, lambda data: data[:-40]))


def test_flipped_payload_byte(dataset_path: Path) -> None:
    def edit(data: bytearray) -> bytearray:
        data[-6] ^= 0xFF
        return data

    with pytest.raises(ChecksumError):
        read_dataset(_corrupt(dataset_path, edit))


def test_trailing_bytes(dataset_path: Path) -> None:
    with pytest.raises(DatasetFormatError):
        read_dataset(_corrupt(dataset_path, lambda data: data + b"\x00\x00"))


def test_unexpected_dimensions(dataset_path: Path) -> None:
    with pytest.raises(HeaderMismatchError):
        read_dataset(dataset_path, expect_dims=(64, 16))


def test_format_errors_are_io_errors(dataset_path: Path) -> None:
    with pytest.raises(OSError):
        read_dataset(_corrupt(dataset_path, lambda data: data[:3]))


@pytest.mark.parametrize("offset", [13, 17, 21])
def test_huge_header_count_is_a_format_error(dataset_path: Path, offset: int) -> None:
    # high bytes of samples_per_session, fmri_dim, embed_dim
    def edit(data: bytearray) -> bytearray:
        data[offset] = 0xFF
        return data

    with pytest.raises(DatasetFormatError):
        read_dataset(_corrupt(dataset_path, edit))
