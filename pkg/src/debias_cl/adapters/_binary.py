from __future__ import annotations

import json
import logging
import os
import struct
import zlib
from pathlib import Path

from ..core.errors import (
    BadMagicError,
    ChecksumError,
    DatasetFormatError,
    TruncatedFileError,
    VersionMismatchError,
)

_PREAMBLE = struct.Struct("<4sH")
_CRC = struct.Struct("<I")

PREAMBLE_SIZE = _PREAMBLE.size
CRC_SIZE = _CRC.size


def structured_log(logger: logging.Logger, level: int, *, event: str, adapter: str, **extra: object) -> None:
    """Emit a JSON log line with a stable schema for file telemetry."""

    payload = {"event": event, "adapter": adapter, **extra}
    logger.log(level, json.dumps(payload, separators=(",", ":"), default=str))


def frame(magic: bytes, version: int, payload: bytes) -> bytes:
    return _PREAMBLE.pack(magic, version) + payload + _CRC.pack(zlib.crc32(payload))


def check_preamble(data: bytes, magic: bytes, version: int, *, path: Path) -> None:
    if len(data) < len(magic) or data[: len(magic)] != magic:
        raise BadMagicError(f"{path}: expected magic {magic!r}, found {bytes(data[: len(magic)])!r}")
    if len(data) < PREAMBLE_SIZE:
        raise TruncatedFileError(f"{path}: file ends inside the preamble")
    _, found = _PREAMBLE.unpack_from(data, 0)
    if found != version:
        raise VersionMismatchError(f"{path}: format version {found}, expected {version}")


def require_length(data: bytes, needed: int, *, path: Path, what: str) -> None:
    if len(data) < needed:
        raise TruncatedFileError(f"{path}: truncated in {what} ({len(data)} of {needed} bytes)")


def verify_checksum(data: bytes, payload_end: int, *, path: Path) -> None:
    """Check the CRC32 stored right after ``payload_end`` against the payload bytes."""

    require_length(data, payload_end + CRC_SIZE, path=path, what="checksum")
    if len(data) > payload_end + CRC_SIZE:
        raise DatasetFormatError(f"{path}: {len(data) - payload_end - CRC_SIZE} unexpected trailing bytes")
    (stored,) = _CRC.unpack_from(data, payload_end)
    actual = zlib.crc32(data[PREAMBLE_SIZE:payload_end])
    if stored != actual:
        raise ChecksumError(f"{path}: checksum {actual:#010x} does not match stored {stored:#010x}")


def write_atomic(path: Path, data: bytes) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_bytes(data)
    os.replace(tmp, path)


__all__ = [
    "CRC_SIZE",
    "PREAMBLE_SIZE",
    "check_preamble",
    "frame",
    "require_length",
    "structured_log",
    "verify_checksum",
    "write_atomic",
]
