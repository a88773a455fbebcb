"""実験設定ドキュメントの読み込み (JSON / YAML / INI) と差分ログ."""

from __future__ import annotations

import configparser
import json
import logging
from pathlib import Path
from typing import Any, Dict, Mapping

from ..core.errors import ConfigError

yaml: Any = None
try:  # pragma: no cover - optional dependency
    import yaml as _yaml  # type: ignore[import-untyped]

    yaml = _yaml
except ModuleNotFoundError:  # pragma: no cover - optional dependency
    pass


_LOGGER = logging.getLogger(__name__)

_YAML_SUFFIXES = {".yaml", ".yml"}
_INI_SUFFIXES = {".ini", ".cfg"}


def load_document(path: str | Path) -> Dict[str, Any]:
    source = Path(path)
    text = source.read_text(encoding="utf-8")
    suffix = source.suffix.lower()
    if suffix in _YAML_SUFFIXES:
        kind, document = "yaml", parse_yaml_text(text)
    elif suffix in _INI_SUFFIXES:
        kind, document = "ini", parse_ini_text(text)
    else:
        kind, document = "json", parse_json_text(text)
    _LOGGER.debug("config_loaded", extra={"event": "config_loaded", "path": str(source), "syntax": kind})
    return document


def _reject_duplicates(pairs: list[tuple[str, Any]]) -> Dict[str, Any]:
    result: Dict[str, Any] = {}
    for key, value in pairs:
        if key in result:
            raise ConfigError("duplicate key", key=key)
        result[key] = value
    return result


def _require_mapping(document: Any) -> Dict[str, Any]:
    if document is None:
        return {}
    if not isinstance(document, Mapping):
        raise ConfigError("top level must be a mapping of sections", line=1)
    return dict(document)


def parse_json_text(text: str) -> Dict[str, Any]:
    try:
        document = json.loads(text, object_pairs_hook=_reject_duplicates)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{exc.msg} (column {exc.colno})", line=exc.lineno) from exc
    return _require_mapping(document)


def parse_yaml_text(text: str) -> Dict[str, Any]:
    if yaml is None:
        raise ConfigError("YAML config requires PyYAML; use a .json file instead")
    try:
        document = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        line = mark.line + 1 if mark is not None else None
        problem = getattr(exc, "problem", None) or str(exc)
        raise ConfigError(str(problem), line=line) from exc
    return _require_mapping(document)


def _ini_value(raw: str) -> Any:
    try:
        return json.loads(raw)
    except json.JSONDecodeError:
        return raw


def parse_ini_text(text: str) -> Dict[str, Any]:
    """``[section]`` / ``[section.sub]`` with ``key = value``; values are JSON literals or bare strings."""

    parser = configparser.ConfigParser(interpolation=None)
    parser.optionxform = str  # type: ignore[assignment,method-assign]
    try:
        parser.read_string(text)
    except configparser.ParsingError as exc:
        line = exc.errors[0][0] if exc.errors else None
        raise ConfigError("malformed line", line=line) from exc
    except (configparser.DuplicateSectionError, configparser.DuplicateOptionError) as exc:
        key = exc.section if isinstance(exc, configparser.DuplicateSectionError) else f"{exc.section}.{exc.option}"
        raise ConfigError("duplicate entry", key=key, line=exc.lineno) from exc
    document: Dict[str, Any] = {}
    for section in parser.sections():
        target = document
        for part in section.split("."):
            node = target.setdefault(part, {})
            if not isinstance(node, dict):
                raise ConfigError("section collides with a value", key=section)
            target = node
        for key, raw in parser.items(section):
            target[key] = _ini_value(raw)
    return document


def strip_documentation(document: Mapping[str, Any]) -> Dict[str, Any]:
    """``_usage`` のような ``_`` 始まりのキーを再帰的に取り除く."""

    cleaned: Dict[str, Any] = {}
    for key, value in document.items():
        if str(key).startswith("_"):
            continue
        cleaned[key] = strip_documentation(value) if isinstance(value, Mapping) else value
    return cleaned


def emit_settings_diff(previous: Mapping[str, Any], current: Mapping[str, Any]) -> Dict[str, Dict[str, Any]]:
    """Flatten the differences into ``{"dotted.key": {"old": ..., "new": ...}}``."""

    diff: Dict[str, Dict[str, Any]] = {}
    pending: list[tuple[tuple[str, ...], Any, Any]] = [((), previous, current)]
    while pending:
        prefix, before, after = pending.pop()
        if not (isinstance(before, Mapping) and isinstance(after, Mapping)):
            if before != after:
                diff[".".join(prefix) or "<root>"] = {"old": before, "new": after}
            continue
        for key in set(before) | set(after):
            pending.append((prefix + (str(key),), before.get(key), after.get(key)))
    return dict(sorted(diff.items()))


__all__ = [
    "emit_settings_diff",
    "load_document",
    "parse_ini_text",
    "parse_json_text",
    "parse_yaml_text",
    "strip_documentation",
]
