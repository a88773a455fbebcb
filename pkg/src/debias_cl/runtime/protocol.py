from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator

from ..core.errors import ProtocolError
from ..core.types import SessionRange


@dataclass(frozen=True)
class CLProtocol:
    """``(n_init, n_step)`` session-incremental setup over ``n_sessions`` sessions."""

    n_init: int
    n_step: int
    n_sessions: int

    def __post_init__(self) -> None:
        for name in ("n_init", "n_step", "n_sessions"):
            value = getattr(self, name)
            if isinstance(value, bool) or not isinstance(value, int) or value <= 0:
                raise ProtocolError(f"must be a positive integer, got {value!r}", key=f"protocol.{name}")
        if self.n_init > self.n_sessions:
            raise ProtocolError(
                f"n_init={self.n_init} exceeds n_sessions={self.n_sessions}", key="protocol.n_init"
            )
        remainder = (self.n_sessions - self.n_init) % self.n_step
        if remainder:
            raise ProtocolError(
                f"{self.n_sessions - self.n_init} remaining sessions do not split into blocks of {self.n_step}",
                key="protocol.n_step",
            )

    @property
    def step_count(self) -> int:
        return (self.n_sessions - self.n_init) // self.n_step + 1

    @property
    def label(self) -> str:
        return f"({self.n_init},{self.n_step})"


@dataclass(frozen=True)
class PlannedStep:
    index: int
    sessions: SessionRange
    eval_range: SessionRange


@dataclass(frozen=True)
class StepPlan:
    steps: tuple[PlannedStep, ...]

    def __len__(self) -> int:
        return len(self.steps)

    def __iter__(self) -> Iterator[PlannedStep]:
        return iter(self.steps)

    def __getitem__(self, index: int) -> PlannedStep:
        return self.steps[index]


def plan_steps(protocol: CLProtocol) -> StepPlan:
    steps = [PlannedStep(1, SessionRange(1, protocol.n_init), SessionRange(1, protocol.n_init))]
    start = protocol.n_init + 1
    while start <= protocol.n_sessions:
        end = start + protocol.n_step - 1
        steps.append(PlannedStep(len(steps) + 1, SessionRange(start, end), SessionRange(1, end)))
        start = end + 1
    return StepPlan(tuple(steps))


__all__ = ["CLProtocol", "PlannedStep", "StepPlan", "plan_steps"]
