"""BRNC encoder checkpoints: ``"BRNC" | u16 version | config | step | f64 params | u32 CRC32``."""

from __future__ import annotations

import logging
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ..core.encoder import Activation, EncoderConfig, EncoderParams
from ..core.errors import DatasetFormatError, DomainError
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

MAGIC = b"BRNC"
VERSION = 1

# input_dim, hidden_dim, tap_count, output_dim, activation code, init_seed, step, parameter count
_CONFIG = struct.Struct("<IIIIBQIQ")
_ACTIVATION_CODES = {Activation.TANH: 0, Activation.RELU: 1}
_ACTIVATIONS = {code: activation for activation, code in _ACTIVATION_CODES.items()}


@dataclass(frozen=True)
class Checkpoint:
    params: EncoderParams
    step: int


def encode_checkpoint(params: EncoderParams, step: int) -> bytes:
    config = params.config
    block = _CONFIG.pack(
        config.input_dim,
        config.hidden_dim,
        config.tap_count,
        config.output_dim,
        _ACTIVATION_CODES[config.activation],
        config.init_seed,
        step,
        config.parameter_count,
    )
    values = params.flatten().astype("<f8", copy=False)
    return frame(MAGIC, VERSION, block + values.tobytes())


def save_checkpoint(params: EncoderParams, step: int, path: str | Path) -> Path:
    target = Path(path)
    data = encode_checkpoint(params, step)
    write_atomic(target, data)
    structured_log(_LOGGER, logging.INFO, event="checkpoint_written", adapter="brnc", path=str(target), step=step)
    return target


def decode_checkpoint(data: bytes, *, path: Path = Path("<memory>")) -> Checkpoint:
    check_preamble(data, MAGIC, VERSION, path=path)
    require_length(data, PREAMBLE_SIZE + _CONFIG.size, path=path, what="config block")
    fields = _CONFIG.unpack_from(data, PREAMBLE_SIZE)
    input_dim, hidden_dim, tap_count, output_dim, code, init_seed, step, count = fields
    if code not in _ACTIVATIONS:
        raise DatasetFormatError(f"{path}: unknown activation code {code}")
    try:
        config = EncoderConfig(
            input_dim=input_dim,
            hidden_dim=hidden_dim,
            tap_count=tap_count,
            output_dim=output_dim,
            activation=_ACTIVATIONS[code],
            init_seed=init_seed,
        )
    except DomainError as exc:
        raise DatasetFormatError(f"{path}: invalid encoder config: {exc}") from exc
    if count != config.parameter_count:
        raise DatasetFormatError(f"{path}: parameter count {count} disagrees with config ({config.parameter_count})")
    start = PREAMBLE_SIZE + _CONFIG.size
    payload_end = start + count * 8
    require_length(data, payload_end, path=path, what="parameters")
    verify_checksum(data, payload_end, path=path)
    flat = np.frombuffer(data, dtype="<f8", count=count, offset=start).astype(np.float64)
    return Checkpoint(params=EncoderParams.from_flat(config, flat), step=step)


def load_checkpoint(path: str | Path) -> Checkpoint:
    source = Path(path)
    return decode_checkpoint(source.read_bytes(), path=source)


__all__ = ["Checkpoint", "MAGIC", "VERSION", "decode_checkpoint", "encode_checkpoint", "load_checkpoint", "save_checkpoint"]
