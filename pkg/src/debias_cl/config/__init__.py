from __future__ import annotations

from .loader import emit_settings_diff, load_document
from .specs import RunSpec, parse_run_spec, resolve_run_spec

__all__ = ["RunSpec", "emit_settings_diff", "load_document", "parse_run_spec", "resolve_run_spec"]
