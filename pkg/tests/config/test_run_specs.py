from __future__ import annotations

import math

import pytest

from debias_cl.config import parse_run_spec, resolve_run_spec
from debias_cl.core.errors import ConfigError, ProtocolError
from debias_cl.core.losses import BiasModel, DistillKind
from debias_cl.main import build_parser
from debias_cl.runtime.presets import METHODS, PRESETS, deep_merge


def test_defaults_resolve_to_the_desk_preset() -> None:
    spec = resolve_run_spec()
    assert (spec.preset, spec.method, spec.name) == ("desk", "exp6_ours", "exp6_ours")
    assert spec.train.epochs == 15
    assert spec.train.lr0 == pytest.approx(1e-3)
    assert spec.retrieval.n_way == 50
    assert spec.data.drift_angle == pytest.approx(math.pi / 2, abs=1e-6)
    assert spec.train.loss.distill is DistillKind.AFM
    assert spec.train.loss.bias is BiasModel.RESPONSE_ACCURACY
    assert (spec.encoder.input_dim, spec.encoder.output_dim) == (64, 16)
    assert spec.protocol.step_count == 3


def test_paper_preset_scale() -> None:
    spec = resolve_run_spec(preset="paper")
    assert spec.preset == "paper"
    assert spec.train.epochs == 50
    assert spec.train.lr0 == pytest.approx(2.5e-4)
    assert spec.retrieval.n_way == 200
    assert spec.data.drift_angle == 0.0
    assert spec.train.loss.lambda_cl == 1.0
    alias = resolve_run_spec(preset="full")
    assert (alias.train, alias.retrieval, alias.data) == (spec.train, spec.retrieval, spec.data)


@pytest.mark.parametrize("preset", ["paper", "desk", "full"])
def test_cli_accepts_every_preset(preset: str) -> None:
    args = build_parser().parse_args(["train", "--preset", preset])
    assert resolve_run_spec(preset=args.preset).preset == preset


@pytest.mark.parametrize(
    ("preset", "method", "expected"),
    [
        ("desk", "exp6_ours", 4000.0),
        ("desk", "exp4_dcl_ba_afm", 4000.0),
        ("desk", "dcl_afm", 4000.0),
        ("desk", "exp3_dcl_ra_l2", 1.0),
        ("desk", "exp2_contrastive_l2", 1.0),
        ("paper", "exp6_ours", 1.0),
        ("paper", "exp3_dcl_ra_l2", 1.0),
    ],
)
def test_distillation_weight_is_calibrated_per_preset(preset: str, method: str, expected: float) -> None:
    spec = resolve_run_spec(preset=preset, method=method)
    assert spec.train.loss.lambda_cl == expected


def test_document_lambda_wins_over_calibration() -> None:
    spec = resolve_run_spec({"loss": {"lambda_cl": 2.5}}, method="exp6_ours")
    assert spec.train.loss.lambda_cl == 2.5
    calibrated = resolve_run_spec(method="exp6_ours")
    assert calibrated.overrides["loss.lambda_cl"] == {"old": 1.0, "new": 4000.0}
    assert parse_run_spec(calibrated.to_dict()).train.loss.lambda_cl == 4000.0


@pytest.mark.parametrize(
    ("method", "distill", "bias", "rehearsal"),
    [
        ("wo_cl", DistillKind.NONE, BiasModel.NONE, 0.0),
        ("exp2_contrastive_l2", DistillKind.L2, BiasModel.NONE, 0.0),
        ("exp3_dcl_ra_l2", DistillKind.L2, BiasModel.RESPONSE_ACCURACY, 0.0),
        ("exp4_dcl_ba_afm", DistillKind.AFM, BiasModel.BRAIN_ACTIVATION, 0.0),
        ("exp5_dcl_ra_rehearsal", DistillKind.NONE, BiasModel.RESPONSE_ACCURACY, 0.1),
        ("dcl_l2", DistillKind.L2, BiasModel.RESPONSE_ACCURACY, 0.0),
    ],
)
def test_method_overlays(method: str, distill: DistillKind, bias: BiasModel, rehearsal: float) -> None:
    spec = resolve_run_spec(method=method)
    assert spec.train.loss.distill is distill
    assert spec.train.loss.bias is bias
    assert spec.train.rehearsal_fraction == rehearsal
    assert not spec.joint


def test_joint_method_trains_all_sessions_at_once() -> None:
    spec = resolve_run_spec(method="exp1_noncl")
    assert spec.joint
    assert spec.protocol.n_init == 40
    assert spec.protocol.step_count == 1


def test_seed_overrides_every_stream() -> None:
    spec = resolve_run_spec(seed=7)
    assert (spec.data.seed, spec.train.run_seed, spec.retrieval.seed) == (7, 7, 7)
    assert spec.overrides["data.seed"] == {"old": 42, "new": 7}


def test_user_document_wins_over_presets() -> None:
    spec = resolve_run_spec({"run": {"name": "short", "method": "wo_cl"}, "train": {"epochs": 2}}, out_dir="runs/x")
    assert spec.name == "short"
    assert spec.method == "wo_cl"
    assert spec.train.epochs == 2
    assert spec.out_dir == "runs/x"
    assert "train.epochs" in spec.overrides
    assert resolve_run_spec({"run": {"method": "wo_cl"}}, method="exp6_ours").method == "exp6_ours"


@pytest.mark.parametrize(
    ("document", "key"),
    [
        ({"train": {"epoch": 2}}, "train.epoch"),
        ({"training": {}}, "training"),
        ({"train": {"epochs": "3"}}, "train.epochs"),
        ({"train": {"epochs": True}}, "train.epochs"),
        ({"data": {"test_fraction": 1.5}}, "data"),
        ({"loss": {"distill": "cosine"}}, "loss.distill"),
        ({"retrieval": {"n_way": 1}}, "retrieval.n_way"),
        ({"run": {"preset": "huge"}}, "run.preset"),
        ({"train": {"optimizer": {"beta1": 1.5}}}, "train.optimizer"),
    ],
)
def test_invalid_documents_name_the_key(document: dict, key: str) -> None:
    with pytest.raises(ConfigError) as excinfo:
        resolve_run_spec(document)
    assert excinfo.value.key == key


def test_protocol_mismatch_is_a_protocol_error() -> None:
    with pytest.raises(ProtocolError):
        resolve_run_spec({"protocol": {"n_step": 7}})


def test_to_dict_reparses_to_an_equal_spec() -> None:
    spec = resolve_run_spec({"train": {"epochs": 3}}, method="exp5_dcl_ra_rehearsal", seed=5)
    assert parse_run_spec(spec.to_dict()) == spec


def test_parse_requires_complete_documents() -> None:
    document = resolve_run_spec().to_dict()
    del document["loss"]["temperature"]
    with pytest.raises(ConfigError) as excinfo:
        parse_run_spec(document)
    assert excinfo.value.key == "loss.temperature"


def test_presets_are_complete_documents() -> None:
    for preset in PRESETS:
        for method, overlay in METHODS.items():
            merged = deep_merge(PRESETS[preset], overlay)
            merged["run"].update({"preset": preset, "method": method})
            assert parse_run_spec(merged).method == method
