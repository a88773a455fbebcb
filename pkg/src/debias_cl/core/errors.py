from __future__ import annotations

from typing import Sequence


class DebiasCLError(Exception):
    """Root of every error raised by this package."""


class DimensionError(DebiasCLError, ValueError):
    def __init__(self, message: str, *shapes: Sequence[int]) -> None:
        rendered = " vs ".join("x".join(str(dim) for dim in shape) or "scalar" for shape in shapes)
        super().__init__(f"{message}: {rendered}" if rendered else message)
        self.shapes = tuple(tuple(shape) for shape in shapes)


class DegenerateVectorError(DebiasCLError, ValueError):
    def __init__(self, row: int, norm: float, epsilon: float) -> None:
        super().__init__(f"row {row} has norm {norm:.3e} <= {epsilon:.1e}")
        self.row = row
        self.norm = norm


class DomainError(DebiasCLError, ValueError):
    pass


class NumericFailure(DebiasCLError, ArithmeticError):
    """Non-finite value encountered; ``coordinates`` locates it."""

    def __init__(self, message: str, **coordinates: object) -> None:
        detail = ", ".join(f"{key}={value}" for key, value in coordinates.items())
        super().__init__(f"{message} ({detail})" if detail else message)
        self.reason = message
        self.coordinates = dict(coordinates)


class ConfigError(DebiasCLError, ValueError):
    def __init__(self, message: str, *, key: str | None = None, line: int | None = None) -> None:
        prefix = ""
        if key:
            prefix = f"{key}: "
        if line is not None:
            prefix = f"line {line}: {prefix}"
        super().__init__(prefix + message)
        self.key = key
        self.line = line


class ProtocolError(ConfigError):
    pass


class DatasetError(DebiasCLError):
    pass


class EmptySessionError(DatasetError, ValueError):
    pass


class EmptyTestSetError(DatasetError, ValueError):
    pass


class DatasetFormatError(DatasetError, OSError):
    """Base for on-disk format problems (dataset and checkpoint files)."""


class BadMagicError(DatasetFormatError):
    pass


class VersionMismatchError(DatasetFormatError):
    pass


class TruncatedFileError(DatasetFormatError):
    pass


class ChecksumError(DatasetFormatError):
    pass


class HeaderMismatchError(DatasetFormatError):
    pass


__all__ = [
    "BadMagicError",
    "ChecksumError",
    "ConfigError",
    "DatasetError",
    "DatasetFormatError",
    "DebiasCLError",
    "DegenerateVectorError",
    "DimensionError",
    "DomainError",
    "EmptySessionError",
    "EmptyTestSetError",
    "HeaderMismatchError",
    "NumericFailure",
    "ProtocolError",
    "TruncatedFileError",
    "VersionMismatchError",
]
