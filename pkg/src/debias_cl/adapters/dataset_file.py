"""VBCL dataset files.

Layout (little-endian)::

    "VBCL" | u16 version | header | session records | sample records | u32 CRC32

The CRC covers everything between the version field and the checksum.
"""

from __future__ import annotations

import logging
import struct
from pathlib import Path

import numpy as np

from ..core.errors import DatasetError, DatasetFormatError, DimensionError, DomainError, HeaderMismatchError
from ..core.types import SessionMeta
from ..features.synth.dataset import Dataset, DatasetHeader
from ._binary import (
    PREAMBLE_SIZE,
    check_preamble,
    frame,
    require_length,
    structured_log,
    verify_checksum,
    write_atomic,
)

_LOGGER = logging.getLogger(__name__)

MAGIC = b"VBCL"
VERSION = 1

_HEADER = struct.Struct("<IIIIdQ")
_SESSION_DTYPE = np.dtype([("t", "<u4"), ("r", "<f8"), ("consistency", "<f8"), ("a", "<f8")])

FLAG_RESPONSE_CORRECT = 0x01
FLAG_TEST = 0x02


def _sample_record_size(fmri_dim: int, embed_dim: int) -> int:
    # packed layout of _sample_dtype: u4 session, u1 flags, f8 x[n], f8 c[d]
    return 5 + 8 * (fmri_dim + embed_dim)


def _sample_dtype(fmri_dim: int, embed_dim: int) -> np.dtype:
    return np.dtype([("t", "<u4"), ("flags", "u1"), ("x", "<f8", (fmri_dim,)), ("c", "<f8", (embed_dim,))])


def encode_dataset(dataset: Dataset) -> bytes:
    header = dataset.header
    head = _HEADER.pack(
        header.n_sessions,
        header.samples_per_session,
        header.fmri_dim,
        header.embed_dim,
        header.test_fraction,
        header.seed,
    )
    sessions = np.zeros(len(dataset.sessions), dtype=_SESSION_DTYPE)
    for row, meta in enumerate(dataset.sessions):
        sessions[row] = (meta.session_index, meta.response_accuracy, meta.consistency, meta.activation_fraction)
    samples = np.zeros(dataset.n_samples, dtype=_sample_dtype(header.fmri_dim, header.embed_dim))
    samples["t"] = dataset.session
    samples["flags"] = dataset.response_correct * FLAG_RESPONSE_CORRECT | dataset.is_test * FLAG_TEST
    samples["x"] = dataset.x
    samples["c"] = dataset.c
    return frame(MAGIC, VERSION, head + sessions.tobytes() + samples.tobytes())


def write_dataset(dataset: Dataset, path: str | Path) -> Path:
    target = Path(path)
    data = encode_dataset(dataset)
    write_atomic(target, data)
    structured_log(
        _LOGGER,
        logging.INFO,
        event="dataset_written",
        adapter="vbcl",
        path=str(target),
        bytes=len(data),
        samples=dataset.n_samples,
    )
    return target


def decode_dataset(
    data: bytes,
    *,
    path: Path = Path("<memory>"),
    expect_dims: tuple[int, int] | None = None,
) -> Dataset:
    check_preamble(data, MAGIC, VERSION, path=path)
    offset = PREAMBLE_SIZE
    require_length(data, offset + _HEADER.size, path=path, what="header")
    n_sessions, per_session, fmri_dim, embed_dim, test_fraction, seed = _HEADER.unpack_from(data, offset)
    offset += _HEADER.size
    if expect_dims is not None and (fmri_dim, embed_dim) != tuple(expect_dims):
        raise HeaderMismatchError(
            f"{path}: file holds n={fmri_dim}, d={embed_dim}; expected n={expect_dims[0]}, d={expect_dims[1]}"
        )
    try:
        header = DatasetHeader(
            n_sessions=n_sessions,
            samples_per_session=per_session,
            fmri_dim=fmri_dim,
            embed_dim=embed_dim,
            test_fraction=test_fraction,
            seed=seed,
        )
    except DomainError as exc:
        raise DatasetFormatError(f"{path}: invalid header: {exc}") from exc
    # sizes come from arithmetic so a corrupt header never reaches np.dtype
    sessions_end = offset + n_sessions * _SESSION_DTYPE.itemsize
    payload_end = sessions_end + header.n_samples * _sample_record_size(fmri_dim, embed_dim)
    require_length(data, sessions_end, path=path, what="session records")
    require_length(data, payload_end, path=path, what="sample records")
    verify_checksum(data, payload_end, path=path)
    sample_dtype = _sample_dtype(fmri_dim, embed_dim)

    sessions = np.frombuffer(data, dtype=_SESSION_DTYPE, count=n_sessions, offset=offset)
    samples = np.frombuffer(data, dtype=sample_dtype, count=header.n_samples, offset=sessions_end)
    flags = samples["flags"]
    try:
        metas = tuple(
            SessionMeta(
                session_index=int(record["t"]),
                response_accuracy=float(record["r"]),
                consistency=float(record["consistency"]),
                activation_fraction=float(record["a"]),
            )
            for record in sessions
        )
        return Dataset(
            header=header,
            sessions=metas,
            x=samples["x"],
            c=samples["c"],
            session=samples["t"].astype(np.int64),
            response_correct=(flags & FLAG_RESPONSE_CORRECT) != 0,
            is_test=(flags & FLAG_TEST) != 0,
        )
    except (DomainError, DimensionError, DatasetError) as exc:
        raise DatasetFormatError(f"{path}: invalid records: {exc}") from exc


def read_dataset(path: str | Path, *, expect_dims: tuple[int, int] | None = None) -> Dataset:
    """Load a VBCL file; ``expect_dims`` ``(n, d)`` is checked before the payload is parsed."""

    source = Path(path)
    data = source.read_bytes()
    dataset = decode_dataset(data, path=source, expect_dims=expect_dims)
    structured_log(
        _LOGGER,
        logging.DEBUG,
        event="dataset_read",
        adapter="vbcl",
        path=str(source),
        samples=dataset.n_samples,
    )
    return dataset


__all__ = ["MAGIC", "VERSION", "decode_dataset", "encode_dataset", "read_dataset", "write_dataset"]
