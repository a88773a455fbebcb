"""学習・評価ループ用のインメモリ計測.

バッチ毎に observe されるため記録は保持せず、系列ごとの集計値だけを更新する。
"""

from __future__ import annotations

from collections.abc import Mapping
from dataclasses import dataclass
from threading import Lock
from typing import Any, Protocol

TagsKey = tuple[tuple[str, str], ...]


def _tags_key(tags: Mapping[str, str] | None) -> TagsKey:
    return tuple(sorted(tags.items())) if tags else ()


def _tags_label(tags: TagsKey) -> str:
    return ",".join(f"{key}={value}" for key, value in tags) or "-"


@dataclass(frozen=True)
class CounterSnapshot:
    count: int


@dataclass(frozen=True)
class ObservationSnapshot:
    count: int
    minimum: float
    maximum: float
    total: float
    average: float
    last: float


@dataclass(frozen=True)
class MetricsSnapshot:
    counters: Mapping[str, Mapping[TagsKey, CounterSnapshot]]
    observations: Mapping[str, Mapping[TagsKey, ObservationSnapshot]]

    def to_summary(self) -> dict[str, Any]:
        """JSON 化可能な要約 (タグは ``k=v,k=v`` 形式の文字列キー)."""

        counters = {
            name: {_tags_label(tags): counter.count for tags, counter in sorted(series.items())}
            for name, series in sorted(self.counters.items())
        }
        observations = {
            name: {
                _tags_label(tags): {
                    "count": obs.count,
                    "min": obs.minimum,
                    "max": obs.maximum,
                    "mean": obs.average,
                    "last": obs.last,
                }
                for tags, obs in sorted(series.items())
            }
            for name, series in sorted(self.observations.items())
        }
        return {"counters": counters, "observations": observations}


class MetricsRecorder(Protocol):
    def increment(self, name: str, tags: Mapping[str, str] | None = None) -> None:
        ...

    def observe(self, name: str, value: float, tags: Mapping[str, str] | None = None) -> None:
        ...


class NullMetricsRecorder(MetricsRecorder):
    def increment(self, name: str, tags: Mapping[str, str] | None = None) -> None:
        return None

    def observe(self, name: str, value: float, tags: Mapping[str, str] | None = None) -> None:
        return None


class _Running:
    __slots__ = ("count", "minimum", "maximum", "total", "last")

    def __init__(self, value: float) -> None:
        self.count = 1
        self.minimum = self.maximum = self.total = self.last = value

    def add(self, value: float) -> None:
        self.count += 1
        self.minimum = min(self.minimum, value)
        self.maximum = max(self.maximum, value)
        self.total += value
        self.last = value

    def freeze(self) -> ObservationSnapshot:
        return ObservationSnapshot(
            count=self.count,
            minimum=self.minimum,
            maximum=self.maximum,
            total=self.total,
            average=self.total / self.count,
            last=self.last,
        )


class MetricsService(MetricsRecorder):
    """スレッド安全な集計器. 1 ラン (または 1 解析) ごとに 1 インスタンスを使う."""

    def __init__(self) -> None:
        self._lock = Lock()
        self._counts: dict[str, dict[TagsKey, int]] = {}
        self._running: dict[str, dict[TagsKey, _Running]] = {}

    def increment(self, name: str, tags: Mapping[str, str] | None = None) -> None:
        key = _tags_key(tags)
        with self._lock:
            series = self._counts.setdefault(name, {})
            series[key] = series.get(key, 0) + 1

    def observe(self, name: str, value: float, tags: Mapping[str, str] | None = None) -> None:
        key = _tags_key(tags)
        number = float(value)
        with self._lock:
            series = self._running.setdefault(name, {})
            running = series.get(key)
            if running is None:
                series[key] = _Running(number)
            else:
                running.add(number)

    def collect_snapshot(self) -> MetricsSnapshot:
        with self._lock:
            counters = {
                name: {key: CounterSnapshot(count) for key, count in series.items()}
                for name, series in self._counts.items()
            }
            observations = {
                name: {key: running.freeze() for key, running in series.items()}
                for name, series in self._running.items()
            }
        return MetricsSnapshot(counters=counters, observations=observations)


__all__ = [
    "CounterSnapshot",
    "MetricsRecorder",
    "MetricsService",
    "MetricsSnapshot",
    "NullMetricsRecorder",
    "ObservationSnapshot",
]
