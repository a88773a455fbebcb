from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field, fields
from typing import Any, Callable, Mapping, TypeVar

from ..core.encoder import Activation, EncoderConfig
from ..core.errors import ConfigError, DomainError
from ..core.losses import BiasModel, DistillKind, LossConfig
from ..features.retrieval import RetrievalConfig
from ..features.synth.generator import GenConfig
from ..runtime.optim import AdamWConfig
from ..runtime.presets import (
    DEFAULT_METHOD,
    DEFAULT_PRESET,
    METHODS,
    PRESETS,
    calibrated_lambda,
    deep_merge,
    preset_document,
)
from ..runtime.protocol import CLProtocol
from ..runtime.trainer import TrainConfig
from .loader import emit_settings_diff, strip_documentation

_LOGGER = logging.getLogger(__name__)

_T = TypeVar("_T")

_U64 = 2**64

_SECTION_KEYS: dict[str, frozenset[str]] = {
    "run": frozenset({"name", "preset", "method", "out_dir"}),
    "data": frozenset(f.name for f in fields(GenConfig)),
    "encoder": frozenset({"hidden_dim", "tap_count", "activation", "init_seed"}),
    "protocol": frozenset({"n_init", "n_step", "joint"}),
    "train": frozenset({"lr0", "epochs", "batch_size", "rehearsal_fraction", "run_seed", "optimizer"}),
    "loss": frozenset(f.name for f in fields(LossConfig)),
    "retrieval": frozenset({"n_way", "trials", "seed"}),
    "analyze": frozenset({"window_size"}),
}
_OPTIMIZER_KEYS = frozenset(f.name for f in fields(AdamWConfig))
_INT_DATA_KEYS = frozenset({"n_sessions", "samples_per_session", "fmri_dim", "embed_dim"})


@dataclass(frozen=True)
class RunSpec:
    """Fully resolved experiment configuration; ``to_dict`` re-parses to an equal spec."""

    name: str
    preset: str
    method: str
    out_dir: str | None
    data: GenConfig
    encoder: EncoderConfig
    protocol: CLProtocol
    joint: bool
    train: TrainConfig
    retrieval: RetrievalConfig
    window_size: int
    overrides: Mapping[str, Mapping[str, Any]] = field(default_factory=dict, compare=False)

    def to_dict(self) -> dict[str, Any]:
        loss = self.train.loss
        optimizer = self.train.optimizer
        return {
            "run": {"name": self.name, "preset": self.preset, "method": self.method, "out_dir": self.out_dir},
            "data": {f.name: getattr(self.data, f.name) for f in fields(GenConfig)},
            "encoder": {
                "hidden_dim": self.encoder.hidden_dim,
                "tap_count": self.encoder.tap_count,
                "activation": self.encoder.activation.value,
                "init_seed": self.encoder.init_seed,
            },
            "protocol": {"n_init": self.protocol.n_init, "n_step": self.protocol.n_step, "joint": self.joint},
            "train": {
                "lr0": self.train.lr0,
                "epochs": self.train.epochs,
                "batch_size": self.train.batch_size,
                "rehearsal_fraction": self.train.rehearsal_fraction,
                "run_seed": self.train.run_seed,
                "optimizer": {f.name: getattr(optimizer, f.name) for f in fields(AdamWConfig)},
            },
            "loss": {
                "temperature": loss.temperature,
                "lambda_cl": loss.lambda_cl,
                "symmetric_contrastive": loss.symmetric_contrastive,
                "distill": loss.distill.value,
                "bias": loss.bias.value,
            },
            "retrieval": {"n_way": self.retrieval.n_way, "trials": self.retrieval.trials, "seed": self.retrieval.seed},
            "analyze": {"window_size": self.window_size},
        }


def _ensure_mapping(value: Any, key: str) -> Mapping[str, Any]:
    if not isinstance(value, Mapping):
        raise ConfigError("must be a mapping", key=key)
    return value


def _ensure_known(block: Mapping[str, Any], allowed: frozenset[str], key: str) -> None:
    unknown = sorted(str(name) for name in block if name not in allowed)
    if unknown:
        raise ConfigError("unknown key", key=f"{key}.{unknown[0]}")
    missing = sorted(allowed - set(block))
    if missing:
        raise ConfigError("missing key", key=f"{key}.{missing[0]}")


def _ensure_int(value: Any, key: str, *, minimum: int | None = None) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise ConfigError(f"must be an integer, got {value!r}", key=key)
    if minimum is not None and value < minimum:
        raise ConfigError(f"must be >= {minimum}, got {value}", key=key)
    return value


def _ensure_positive_int(value: Any, key: str) -> int:
    return _ensure_int(value, key, minimum=1)


def _ensure_u64(value: Any, key: str) -> int:
    number = _ensure_int(value, key, minimum=0)
    if number >= _U64:
        raise ConfigError("must fit in 64 bits", key=key)
    return number


def _ensure_float(value: Any, key: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"must be a number, got {value!r}", key=key)
    number = float(value)
    if not math.isfinite(number):
        raise ConfigError("must be finite", key=key)
    return number


def _ensure_bool(value: Any, key: str) -> bool:
    if not isinstance(value, bool):
        raise ConfigError(f"must be true or false, got {value!r}", key=key)
    return value


def _ensure_choice(value: Any, key: str, choices: Mapping[str, Any] | type) -> str:
    names = [member.value for member in choices] if isinstance(choices, type) else list(choices)  # type: ignore[attr-defined]
    if not isinstance(value, str) or value not in names:
        raise ConfigError(f"must be one of {', '.join(sorted(names))}, got {value!r}", key=key)
    return value


def _build(key: str, factory: Callable[[], _T]) -> _T:
    try:
        return factory()
    except DomainError as exc:
        raise ConfigError(str(exc), key=key) from exc


def _section(document: Mapping[str, Any], name: str) -> Mapping[str, Any]:
    block = _ensure_mapping(document.get(name), name)
    _ensure_known(block, _SECTION_KEYS[name], name)
    return block


def parse_run_spec(document: Mapping[str, Any], *, overrides: Mapping[str, Mapping[str, Any]] | None = None) -> RunSpec:
    """Validate a complete document (every section and key present)."""

    document = strip_documentation(_ensure_mapping(document, "<root>"))
    unknown = sorted(str(name) for name in document if name not in _SECTION_KEYS)
    if unknown:
        raise ConfigError("unknown section", key=unknown[0])

    run = _section(document, "run")
    name = run["name"]
    if not isinstance(name, str) or not name.strip():
        raise ConfigError("must be a non-empty string", key="run.name")
    preset = _ensure_choice(run["preset"], "run.preset", PRESETS)
    method = _ensure_choice(run["method"], "run.method", METHODS)
    out_dir = run["out_dir"]
    if out_dir is not None and not isinstance(out_dir, str):
        raise ConfigError("must be a path string or null", key="run.out_dir")

    raw_data = _section(document, "data")
    data_values: dict[str, Any] = {}
    for key, value in raw_data.items():
        dotted = f"data.{key}"
        if key in _INT_DATA_KEYS:
            data_values[key] = _ensure_positive_int(value, dotted)
        elif key == "seed":
            data_values[key] = _ensure_u64(value, dotted)
        else:
            data_values[key] = _ensure_float(value, dotted)
    data = _build("data", lambda: GenConfig(**data_values))

    raw_encoder = _section(document, "encoder")
    encoder = _build(
        "encoder",
        lambda: EncoderConfig(
            input_dim=data.fmri_dim,
            hidden_dim=_ensure_positive_int(raw_encoder["hidden_dim"], "encoder.hidden_dim"),
            tap_count=_ensure_positive_int(raw_encoder["tap_count"], "encoder.tap_count"),
            output_dim=data.embed_dim,
            activation=Activation(_ensure_choice(raw_encoder["activation"], "encoder.activation", Activation)),
            init_seed=_ensure_u64(raw_encoder["init_seed"], "encoder.init_seed"),
        ),
    )

    raw_protocol = _section(document, "protocol")
    joint = _ensure_bool(raw_protocol["joint"], "protocol.joint")
    n_step = _ensure_positive_int(raw_protocol["n_step"], "protocol.n_step")
    n_init = data.n_sessions if joint else _ensure_positive_int(raw_protocol["n_init"], "protocol.n_init")
    protocol = CLProtocol(n_init=n_init, n_step=n_step, n_sessions=data.n_sessions)

    raw_loss = _section(document, "loss")
    loss = _build(
        "loss",
        lambda: LossConfig(
            temperature=_ensure_float(raw_loss["temperature"], "loss.temperature"),
            lambda_cl=_ensure_float(raw_loss["lambda_cl"], "loss.lambda_cl"),
            symmetric_contrastive=_ensure_bool(raw_loss["symmetric_contrastive"], "loss.symmetric_contrastive"),
            distill=DistillKind(_ensure_choice(raw_loss["distill"], "loss.distill", DistillKind)),
            bias=BiasModel(_ensure_choice(raw_loss["bias"], "loss.bias", BiasModel)),
        ),
    )

    raw_train = _section(document, "train")
    raw_optimizer = _ensure_mapping(raw_train["optimizer"], "train.optimizer")
    _ensure_known(raw_optimizer, _OPTIMIZER_KEYS, "train.optimizer")
    optimizer = _build(
        "train.optimizer",
        lambda: AdamWConfig(**{key: _ensure_float(value, f"train.optimizer.{key}") for key, value in raw_optimizer.items()}),
    )
    train = _build(
        "train",
        lambda: TrainConfig(
            lr0=_ensure_float(raw_train["lr0"], "train.lr0"),
            epochs=_ensure_positive_int(raw_train["epochs"], "train.epochs"),
            batch_size=_ensure_int(raw_train["batch_size"], "train.batch_size", minimum=2),
            loss=loss,
            rehearsal_fraction=_ensure_float(raw_train["rehearsal_fraction"], "train.rehearsal_fraction"),
            run_seed=_ensure_u64(raw_train["run_seed"], "train.run_seed"),
            optimizer=optimizer,
        ),
    )

    raw_retrieval = _section(document, "retrieval")
    retrieval = RetrievalConfig(
        n_way=raw_retrieval["n_way"],
        trials=raw_retrieval["trials"],
        seed=_ensure_u64(raw_retrieval["seed"], "retrieval.seed"),
    )

    raw_analyze = _section(document, "analyze")
    window_size = _ensure_positive_int(raw_analyze["window_size"], "analyze.window_size")

    return RunSpec(
        name=name,
        preset=preset,
        method=method,
        out_dir=out_dir,
        data=data,
        encoder=encoder,
        protocol=protocol,
        joint=joint,
        train=train,
        retrieval=retrieval,
        window_size=window_size,
        overrides=dict(overrides or {}),
    )


def resolve_run_spec(
    document: Mapping[str, Any] | None = None,
    *,
    preset: str | None = None,
    method: str | None = None,
    seed: int | None = None,
    out_dir: str | None = None,
) -> RunSpec:
    """Preset, then method overlay, then the config document, then command-line overrides.

    Desk runs pick up the preset's per-distillation ``lambda_cl`` unless the document sets one.
    """

    user = strip_documentation(_ensure_mapping(document or {}, "<root>"))
    run_block = _ensure_mapping(user.get("run", {}), "run")
    preset_name = _ensure_choice(preset or run_block.get("preset", DEFAULT_PRESET), "run.preset", PRESETS)
    method_name = _ensure_choice(method or run_block.get("method", DEFAULT_METHOD), "run.method", METHODS)

    base = preset_document(preset_name)
    merged = deep_merge(deep_merge(base, METHODS[method_name]), user)
    run_section = merged.setdefault("run", {})
    run_section["preset"] = preset_name
    run_section["method"] = method_name
    if "name" not in run_block:
        run_section["name"] = method_name
    loss_block = merged.get("loss")
    user_loss = user.get("loss")
    if isinstance(loss_block, dict) and not (isinstance(user_loss, Mapping) and "lambda_cl" in user_loss):
        calibrated = calibrated_lambda(preset_name, str(loss_block.get("distill")))
        if calibrated is not None:
            loss_block["lambda_cl"] = calibrated
    if seed is not None:
        value = _ensure_u64(seed, "--seed")
        for section, key in (("data", "seed"), ("train", "run_seed"), ("retrieval", "seed")):
            block = merged.get(section)
            if isinstance(block, dict):
                block[key] = value
    if out_dir is not None:
        run_section["out_dir"] = str(out_dir)

    overrides = emit_settings_diff(base, merged)
    _LOGGER.info(
        "run_spec_resolved",
        extra={"event": "run_spec_resolved", "preset": preset_name, "method": method_name, "diff": overrides},
    )
    return parse_run_spec(merged, overrides=overrides)


__all__ = ["RunSpec", "parse_run_spec", "resolve_run_spec"]
