from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Sequence, Union

import numpy as np

from .errors import DimensionError, DomainError
from .tensor import GradTape, Tensor, current_tape, matmul, ones, relu, tanh


class Activation(str, Enum):
    TANH = "tanh"
    RELU = "relu"


@dataclass(frozen=True)
class EncoderConfig:
    """MLP shape ``n -> [hidden] x tap_count -> d``."""

    input_dim: int
    hidden_dim: int = 128
    tap_count: int = 3
    output_dim: int = 16
    activation: Activation = Activation.TANH
    init_seed: int = 0

    def __post_init__(self) -> None:
        for name in ("input_dim", "hidden_dim", "tap_count", "output_dim"):
            value = getattr(self, name)
            if isinstance(value, bool) or not isinstance(value, int) or value <= 0:
                raise DomainError(f"encoder.{name} must be a positive integer, got {value!r}")
        if not 0 <= self.init_seed < 2**64:
            raise DomainError("encoder.init_seed must fit in 64 bits")
        object.__setattr__(self, "activation", Activation(self.activation))

    @property
    def layer_shapes(self) -> tuple[tuple[int, int], ...]:
        dims = [self.input_dim] + [self.hidden_dim] * self.tap_count + [self.output_dim]
        return tuple((dims[i], dims[i + 1]) for i in range(len(dims) - 1))

    @property
    def parameter_count(self) -> int:
        return sum(fan_in * fan_out + fan_out for fan_in, fan_out in self.layer_shapes)


@dataclass(frozen=True)
class EncoderParams:
    config: EncoderConfig
    weights: tuple[np.ndarray, ...]
    biases: tuple[np.ndarray, ...]

    def __post_init__(self) -> None:
        shapes = self.config.layer_shapes
        if len(self.weights) != len(shapes) or len(self.biases) != len(shapes):
            raise DimensionError("layer count does not match config", (len(self.weights),), (len(shapes),))
        for weight, bias, (fan_in, fan_out) in zip(self.weights, self.biases, shapes):
            if weight.shape != (fan_in, fan_out):
                raise DimensionError("weight shape does not match config", weight.shape, (fan_in, fan_out))
            if bias.shape != (1, fan_out):
                raise DimensionError("bias shape does not match config", bias.shape, (1, fan_out))

    def arrays(self) -> list[np.ndarray]:
        """Parameters in optimizer order: ``W1, b1, W2, b2, ...``."""

        out: list[np.ndarray] = []
        for weight, bias in zip(self.weights, self.biases):
            out.extend((weight, bias))
        return out

    def flatten(self) -> np.ndarray:
        return np.concatenate([a.reshape(-1) for a in self.arrays()])

    @classmethod
    def from_arrays(cls, config: EncoderConfig, arrays: Sequence[np.ndarray]) -> "EncoderParams":
        values = [np.array(a, dtype=np.float64) for a in arrays]
        return cls(config=config, weights=tuple(values[0::2]), biases=tuple(values[1::2]))

    @classmethod
    def from_flat(cls, config: EncoderConfig, flat: np.ndarray) -> "EncoderParams":
        if flat.size != config.parameter_count:
            raise DimensionError("flat parameter vector has the wrong length", (flat.size,), (config.parameter_count,))
        arrays: list[np.ndarray] = []
        offset = 0
        for fan_in, fan_out in config.layer_shapes:
            arrays.append(flat[offset : offset + fan_in * fan_out].reshape(fan_in, fan_out).copy())
            offset += fan_in * fan_out
            arrays.append(flat[offset : offset + fan_out].reshape(1, fan_out).copy())
            offset += fan_out
        return cls.from_arrays(config, arrays)


@dataclass(frozen=True)
class Snapshot:
    """Frozen parameters taken after ``step``; forward passes through it record nothing."""

    params: EncoderParams
    step: int

    def forward(self, x: Tensor | np.ndarray) -> "ForwardTrace":
        return forward(self.params, x, record_gradients=False)


@dataclass(frozen=True)
class WatchedParams:
    """Parameters registered as leaves on a tape."""

    config: EncoderConfig
    tensors: tuple[Tensor, ...]


@dataclass(frozen=True)
class ForwardTrace:
    output: Tensor
    intermediates: tuple[Tensor, ...]
    leaves: tuple[Tensor, ...] = field(default=(), repr=False)


ParamsLike = Union[EncoderParams, WatchedParams]


def init_encoder(config: EncoderConfig) -> EncoderParams:
    # Philox is counter-based, so the stream depends only on init_seed
    rng = np.random.Generator(np.random.Philox(key=config.init_seed))
    arrays: list[np.ndarray] = []
    for fan_in, fan_out in config.layer_shapes:
        bound = math.sqrt(6.0 / (fan_in + fan_out))
        arrays.append(rng.uniform(-bound, bound, size=(fan_in, fan_out)))
        arrays.append(np.zeros((1, fan_out), dtype=np.float64))
    return EncoderParams.from_arrays(config, arrays)


def snapshot_of(params: EncoderParams, step: int) -> Snapshot:
    # from_arrays copies, so the frozen arrays never alias the live parameters
    copied = EncoderParams.from_arrays(params.config, params.arrays())
    for array in copied.arrays():
        array.setflags(write=False)
    return Snapshot(params=copied, step=step)


def watch_params(params: EncoderParams, tape: GradTape | None = None) -> WatchedParams:
    active = tape or current_tape()
    if active is None:
        raise DomainError("watch_params needs an active GradTape")
    return WatchedParams(config=params.config, tensors=tuple(active.watch(a) for a in params.arrays()))


def _layer_tensors(params: ParamsLike, record_gradients: bool) -> tuple[tuple[Tensor, ...], tuple[Tensor, ...]]:
    if isinstance(params, WatchedParams):
        return params.tensors, params.tensors
    if record_gradients:
        watched = watch_params(params)
        return watched.tensors, watched.tensors
    return tuple(Tensor(a) for a in params.arrays()), ()


def forward(params: ParamsLike, x: Tensor | np.ndarray, record_gradients: bool = False) -> ForwardTrace:
    config = params.config
    inputs = x if isinstance(x, Tensor) else Tensor(x)
    if inputs.data.ndim != 2 or inputs.shape[1] != config.input_dim:
        raise DimensionError("encoder input width mismatch", inputs.shape, (config.input_dim,))
    tensors, leaves = _layer_tensors(params, record_gradients)
    activate = tanh if config.activation is Activation.TANH else relu
    # bias rows are expanded through a ones column; no implicit broadcasting
    column = ones((inputs.shape[0], 1))
    hidden = inputs
    taps: list[Tensor] = []
    for layer in range(config.tap_count):
        weight, bias = tensors[2 * layer], tensors[2 * layer + 1]
        hidden = activate(matmul(hidden, weight) + matmul(column, bias))
        taps.append(hidden)
    weight, bias = tensors[-2], tensors[-1]
    output = matmul(hidden, weight) + matmul(column, bias)
    return ForwardTrace(output=output, intermediates=tuple(taps), leaves=leaves)


def embedding_provider(seed: int, count: int, dim: int) -> np.ndarray:
    """Unit-norm stand-ins for frozen visual embeddings."""

    if count < 1 or dim < 1:
        raise DomainError("embedding_provider needs count >= 1 and dim >= 1")
    rng = np.random.Generator(np.random.Philox(key=seed))
    raw = rng.standard_normal((count, dim))
    return raw / np.linalg.norm(raw, axis=1, keepdims=True)


__all__ = [
    "Activation",
    "EncoderConfig",
    "EncoderParams",
    "ForwardTrace",
    "ParamsLike",
    "Snapshot",
    "WatchedParams",
    "embedding_provider",
    "forward",
    "init_encoder",
    "snapshot_of",
    "watch_params",
]
