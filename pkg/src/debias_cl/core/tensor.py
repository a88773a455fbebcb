"""Dense float64 tensors with a reverse-mode gradient tape.

Only the operations the encoder and the training objectives need are provided.
Broadcasting is limited to scalar (shape ``()``) operands.
"""

from __future__ import annotations

from contextvars import ContextVar
from dataclasses import dataclass
from typing import Callable, Iterable, Sequence

import numpy as np

from .errors import DebiasCLError, DegenerateVectorError, DimensionError, DomainError, NumericFailure

Backward = Callable[[np.ndarray], Sequence["np.ndarray | None"]]

NORMALIZE_EPSILON = 1e-12

_ACTIVE_TAPE: ContextVar["GradTape | None"] = ContextVar("debias_cl_active_tape", default=None)


@dataclass(frozen=True)
class _Node:
    parents: tuple[int, ...]
    backward: Backward | None
    shape: tuple[int, ...]
    # positions of ``parents`` within the op's input list
    slots: tuple[int, ...] = ()


class Tensor:
    """Value carrier; ``tape_id`` is set when the tensor lives on a tape."""

    __slots__ = ("data", "tape", "tape_id")

    def __init__(self, data: object, *, tape: "GradTape | None" = None, tape_id: int | None = None) -> None:
        value = np.array(data, dtype=np.float64)
        value.setflags(write=False)
        self.data = value
        self.tape = tape
        self.tape_id = tape_id

    @property
    def shape(self) -> tuple[int, ...]:
        return tuple(self.data.shape)

    @property
    def requires_grad(self) -> bool:
        return self.tape is not None

    def item(self) -> float:
        if self.data.size != 1:
            raise DimensionError("item() needs a single element", self.shape)
        return float(self.data.reshape(()))

    def numpy(self) -> np.ndarray:
        return self.data

    def detach(self) -> "Tensor":
        return Tensor(self.data)

    def __repr__(self) -> str:
        tracked = f", tape_id={self.tape_id}" if self.tape_id is not None else ""
        return f"Tensor(shape={self.shape}{tracked})"

    def __add__(self, other: "Tensor | float") -> "Tensor":
        return add(self, _as_tensor(other))

    def __radd__(self, other: float) -> "Tensor":
        return add(_as_tensor(other), self)

    def __sub__(self, other: "Tensor | float") -> "Tensor":
        return sub(self, _as_tensor(other))

    def __rsub__(self, other: float) -> "Tensor":
        return sub(_as_tensor(other), self)

    def __mul__(self, other: "Tensor | float") -> "Tensor":
        if isinstance(other, Tensor):
            return mul(self, other)
        return scale(self, float(other))

    def __rmul__(self, other: float) -> "Tensor":
        return scale(self, float(other))

    def __neg__(self) -> "Tensor":
        return scale(self, -1.0)

    def __matmul__(self, other: "Tensor") -> "Tensor":
        return matmul(self, other)


class GradTape:
    """Append-only operation record for one training step.

    Use as a context manager so :func:`watch` and tracked forward passes find it.
    """

    def __init__(self) -> None:
        self._nodes: list[_Node] = []
        self._grads: list[np.ndarray | None] | None = None
        self._token: object | None = None

    def __enter__(self) -> "GradTape":
        self._token = _ACTIVE_TAPE.set(self)
        return self

    def __exit__(self, *exc: object) -> None:
        if self._token is not None:
            _ACTIVE_TAPE.reset(self._token)  # type: ignore[arg-type]
            self._token = None

    def __len__(self) -> int:
        return len(self._nodes)

    def watch(self, value: object) -> Tensor:
        data = value.data if isinstance(value, Tensor) else value
        tensor = Tensor(data, tape=self, tape_id=len(self._nodes))
        self._nodes.append(_Node(parents=(), backward=None, shape=tensor.shape))
        return tensor

    def record(self, value: np.ndarray, inputs: Sequence[Tensor], backward: Backward) -> Tensor:
        slots = tuple(i for i, item in enumerate(inputs) if item.tape is self)
        parents = tuple(inputs[i].tape_id for i in slots)  # type: ignore[misc]
        out = Tensor(value, tape=self, tape_id=len(self._nodes))
        self._nodes.append(_Node(parents=parents, backward=backward, shape=out.shape, slots=slots))
        return out

    def backward(self, root: Tensor) -> None:
        if root.tape is not self or root.tape_id is None:
            raise DebiasCLError("backward root is not recorded on this tape")
        if root.data.size != 1:
            raise DimensionError("backward needs a scalar root", root.shape)
        grads: list[np.ndarray | None] = [None] * len(self._nodes)
        grads[root.tape_id] = np.ones(root.shape, dtype=np.float64)
        for index in range(root.tape_id, -1, -1):
            upstream = grads[index]
            node = self._nodes[index]
            if upstream is None or node.backward is None:
                continue
            contributions = node.backward(upstream)
            for parent, slot in zip(node.parents, node.slots):
                contribution = contributions[slot]
                if contribution is None:
                    continue
                current = grads[parent]
                grads[parent] = contribution.copy() if current is None else current + contribution
        self._grads = grads

    def gradient(self, tensor: Tensor) -> np.ndarray:
        if self._grads is None:
            raise DebiasCLError("backward has not been run on this tape")
        if tensor.tape is not self or tensor.tape_id is None:
            raise DebiasCLError("tensor is not recorded on this tape")
        grad = self._grads[tensor.tape_id]
        if grad is None:
            return np.zeros(tensor.shape, dtype=np.float64)
        return grad


def current_tape() -> GradTape | None:
    return _ACTIVE_TAPE.get()


def watch(value: object) -> Tensor:
    tape = current_tape()
    if tape is None:
        raise DebiasCLError("watch() called outside an active GradTape")
    return tape.watch(value)


def _as_tensor(value: "Tensor | float") -> Tensor:
    return value if isinstance(value, Tensor) else Tensor(float(value))


def _tape_of(*tensors: Tensor) -> GradTape | None:
    tapes = {id(t.tape): t.tape for t in tensors if t.tape is not None}
    if len(tapes) > 1:
        raise DebiasCLError("operands are recorded on different tapes")
    return next(iter(tapes.values()), None)


def _emit(value: np.ndarray, inputs: Sequence[Tensor], backward: Backward) -> Tensor:
    tape = _tape_of(*inputs)
    if tape is None:
        return Tensor(value)
    return tape.record(value, inputs, backward)


def _require_matrix(name: str, tensor: Tensor) -> None:
    if tensor.data.ndim != 2:
        raise DimensionError(f"{name} expects a matrix", tensor.shape)


def _reduce_to(grad: np.ndarray, shape: tuple[int, ...]) -> np.ndarray:
    if grad.shape == shape:
        return grad
    return np.asarray(grad.sum(), dtype=np.float64).reshape(shape)


def _check_pair(op: str, a: Tensor, b: Tensor) -> None:
    if a.shape == b.shape or a.shape == () or b.shape == ():
        return
    raise DimensionError(f"{op} operands differ in shape", a.shape, b.shape)


def matmul(a: Tensor, b: Tensor) -> Tensor:
    _require_matrix("matmul", a)
    _require_matrix("matmul", b)
    if a.shape[1] != b.shape[0]:
        raise DimensionError("matmul inner dimensions differ", a.shape, b.shape)
    av, bv = a.data, b.data

    def backward(g: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        return g @ bv.T, av.T @ g

    return _emit(av @ bv, (a, b), backward)


def transpose(a: Tensor) -> Tensor:
    _require_matrix("transpose", a)
    return _emit(a.data.T, (a,), lambda g: (g.T,))


def add(a: Tensor, b: Tensor) -> Tensor:
    _check_pair("add", a, b)
    sa, sb = a.shape, b.shape
    return _emit(a.data + b.data, (a, b), lambda g: (_reduce_to(g, sa), _reduce_to(g, sb)))


def sub(a: Tensor, b: Tensor) -> Tensor:
    _check_pair("sub", a, b)
    sa, sb = a.shape, b.shape
    return _emit(a.data - b.data, (a, b), lambda g: (_reduce_to(g, sa), _reduce_to(-g, sb)))


def mul(a: Tensor, b: Tensor) -> Tensor:
    _check_pair("mul", a, b)
    av, bv = a.data, b.data

    def backward(g: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        return _reduce_to(g * bv, av.shape), _reduce_to(g * av, bv.shape)

    return _emit(av * bv, (a, b), backward)


def scale(a: Tensor, factor: float) -> Tensor:
    return _emit(a.data * factor, (a,), lambda g: (g * factor,))


def tanh(a: Tensor) -> Tensor:
    out = np.tanh(a.data)
    return _emit(out, (a,), lambda g: (g * (1.0 - out * out),))


def relu(a: Tensor) -> Tensor:
    mask = (a.data > 0.0).astype(np.float64)
    return _emit(a.data * mask, (a,), lambda g: (g * mask,))


def exp(a: Tensor) -> Tensor:
    out = np.exp(a.data)
    if not np.all(np.isfinite(out)):
        raise NumericFailure("exp overflow", shape=a.shape)
    return _emit(out, (a,), lambda g: (g * out,))


def log(a: Tensor) -> Tensor:
    av = a.data
    if np.any(av <= 0.0):
        raise DomainError("log of a non-positive entry")
    return _emit(np.log(av), (a,), lambda g: (g / av,))


def square(a: Tensor) -> Tensor:
    av = a.data
    return _emit(av * av, (a,), lambda g: (2.0 * g * av,))


def reduce_sum(a: Tensor) -> Tensor:
    shape = a.shape
    return _emit(np.asarray(a.data.sum()), (a,), lambda g: (np.broadcast_to(g, shape).copy(),))


def reduce_mean(a: Tensor) -> Tensor:
    shape = a.shape
    count = max(1, a.data.size)
    return _emit(
        np.asarray(a.data.sum() / count),
        (a,),
        lambda g: (np.broadcast_to(g / count, shape).copy(),),
    )


def rowwise_l2_normalize(a: Tensor, epsilon: float = NORMALIZE_EPSILON) -> Tensor:
    _require_matrix("rowwise_l2_normalize", a)
    norms = np.sqrt(np.sum(a.data * a.data, axis=1, keepdims=True))
    degenerate = np.flatnonzero(norms[:, 0] <= epsilon)
    if degenerate.size:
        row = int(degenerate[0])
        raise DegenerateVectorError(row, float(norms[row, 0]), epsilon)
    out = a.data / norms

    def backward(g: np.ndarray) -> tuple[np.ndarray]:
        radial = np.sum(g * out, axis=1, keepdims=True)
        return ((g - out * radial) / norms,)

    return _emit(out, (a,), backward)


def log_softmax_rows(a: Tensor) -> Tensor:
    _require_matrix("log_softmax_rows", a)
    if not np.all(np.isfinite(a.data)):
        raise NumericFailure("log_softmax_rows received non-finite input", shape=a.shape)
    shifted = a.data - np.max(a.data, axis=1, keepdims=True)
    out = shifted - np.log(np.sum(np.exp(shifted), axis=1, keepdims=True))
    probs = np.exp(out)

    def backward(g: np.ndarray) -> tuple[np.ndarray]:
        return (g - probs * np.sum(g, axis=1, keepdims=True),)

    return _emit(out, (a,), backward)


def ones(shape: Iterable[int]) -> Tensor:
    return Tensor(np.ones(tuple(shape), dtype=np.float64))


__all__ = [
    "GradTape",
    "NORMALIZE_EPSILON",
    "Tensor",
    "add",
    "current_tape",
    "exp",
    "log",
    "log_softmax_rows",
    "matmul",
    "mul",
    "ones",
    "reduce_mean",
    "reduce_sum",
    "relu",
    "rowwise_l2_normalize",
    "scale",
    "square",
    "sub",
    "tanh",
    "transpose",
    "watch",
]
