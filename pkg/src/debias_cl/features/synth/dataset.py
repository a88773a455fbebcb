from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ...core.errors import DatasetError, DimensionError, DomainError
from ...core.types import SessionMeta, SessionRange, Split


@dataclass(frozen=True)
class DatasetHeader:
    n_sessions: int
    samples_per_session: int
    fmri_dim: int
    embed_dim: int
    test_fraction: float
    seed: int

    def __post_init__(self) -> None:
        for name in ("n_sessions", "samples_per_session", "fmri_dim", "embed_dim"):
            value = getattr(self, name)
            if isinstance(value, bool) or not isinstance(value, int) or value <= 0:
                raise DomainError(f"{name} must be a positive integer, got {value!r}")
        if not 0.0 < self.test_fraction < 1.0:
            raise DomainError(f"test_fraction must lie in (0, 1), got {self.test_fraction}")
        if not 0 <= self.seed < 2**64:
            raise DomainError("seed must fit in 64 bits")

    @property
    def n_samples(self) -> int:
        return self.n_sessions * self.samples_per_session

    @property
    def sessions(self) -> SessionRange:
        return SessionRange(1, self.n_sessions)


def _frozen(array: np.ndarray, dtype: type | np.dtype) -> np.ndarray:
    out = np.array(array, dtype=dtype, copy=True)
    out.setflags(write=False)
    return out


@dataclass(frozen=True, eq=False)
class Dataset:
    """Session-structured samples stored column-wise.

    Row ``i`` is the sample with stable id ``i``; ``session`` is 1-based.
    """

    header: DatasetHeader
    sessions: tuple[SessionMeta, ...]
    x: np.ndarray
    c: np.ndarray
    session: np.ndarray
    response_correct: np.ndarray
    is_test: np.ndarray

    def __post_init__(self) -> None:
        header = self.header
        object.__setattr__(self, "x", _frozen(self.x, np.float64))
        object.__setattr__(self, "c", _frozen(self.c, np.float64))
        object.__setattr__(self, "session", _frozen(self.session, np.int64))
        object.__setattr__(self, "response_correct", _frozen(self.response_correct, np.bool_))
        object.__setattr__(self, "is_test", _frozen(self.is_test, np.bool_))
        rows = header.n_samples
        if self.x.shape != (rows, header.fmri_dim):
            raise DimensionError("x does not match the header", self.x.shape, (rows, header.fmri_dim))
        if self.c.shape != (rows, header.embed_dim):
            raise DimensionError("c does not match the header", self.c.shape, (rows, header.embed_dim))
        for name in ("session", "response_correct", "is_test"):
            column = getattr(self, name)
            if column.shape != (rows,):
                raise DimensionError(f"{name} column has the wrong length", column.shape, (rows,))
        if len(self.sessions) != header.n_sessions:
            raise DatasetError(f"expected {header.n_sessions} session records, got {len(self.sessions)}")
        for expected, meta in enumerate(self.sessions, start=1):
            if meta.session_index != expected:
                raise DatasetError(f"session records out of order at {meta.session_index}")
        if rows and (self.session.min() < 1 or self.session.max() > header.n_sessions):
            raise DatasetError("sample session index outside 1..n_sessions")

    @property
    def n_samples(self) -> int:
        return int(self.x.shape[0])

    def meta(self, session_index: int) -> SessionMeta:
        if not 1 <= session_index <= len(self.sessions):
            raise DatasetError(f"no session {session_index}")
        return self.sessions[session_index - 1]

    def mask(self, sessions: SessionRange, split: Split | None = None) -> np.ndarray:
        selected = (self.session >= sessions.start) & (self.session <= sessions.end)
        if split is Split.TEST:
            selected &= self.is_test
        elif split is Split.TRAIN:
            selected &= ~self.is_test
        return selected

    def indices(self, sessions: SessionRange, split: Split | None = None) -> np.ndarray:
        return np.flatnonzero(self.mask(sessions, split))

    def covers(self, n_sessions: int) -> bool:
        return self.header.n_sessions >= n_sessions


__all__ = ["Dataset", "DatasetHeader"]
