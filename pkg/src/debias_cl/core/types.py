from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Iterator

from .errors import DomainError


class Split(str, Enum):
    TRAIN = "train"
    TEST = "test"


class Direction(str, Enum):
    BRAIN_TO_IMAGE = "brain_to_image"
    IMAGE_TO_BRAIN = "image_to_brain"


@dataclass(frozen=True)
class SessionMeta:
    """セッション単位の行動統計 (正答率・一貫性・活性化率)."""

    session_index: int
    response_accuracy: float
    consistency: float
    activation_fraction: float

    def __post_init__(self) -> None:
        if self.session_index < 1:
            raise DomainError(f"session_index must be 1-based, got {self.session_index}")
        for name in ("response_accuracy", "consistency", "activation_fraction"):
            value = getattr(self, name)
            if not 0.0 <= value <= 1.0:
                raise DomainError(f"{name} must lie in [0, 1], got {value}")


@dataclass(frozen=True, order=True)
class SessionRange:
    """Inclusive 1-based session interval."""

    start: int
    end: int

    def __post_init__(self) -> None:
        if self.start < 1 or self.end < self.start:
            raise DomainError(f"invalid session range {self.start}-{self.end}")

    @property
    def label(self) -> str:
        return f"{self.start}-{self.end}"

    def __len__(self) -> int:
        return self.end - self.start + 1

    def __iter__(self) -> Iterator[int]:
        return iter(range(self.start, self.end + 1))

    def __contains__(self, session: object) -> bool:
        return isinstance(session, int) and self.start <= session <= self.end

    @classmethod
    def parse(cls, text: str) -> "SessionRange":
        head, sep, tail = text.strip().partition("-")
        try:
            start = int(head)
            end = int(tail) if sep else start
        except ValueError as exc:
            raise DomainError(f"session range must look like 'a-b', got {text!r}") from exc
        return cls(start, end)


__all__ = ["Direction", "SessionMeta", "SessionRange", "Split"]
