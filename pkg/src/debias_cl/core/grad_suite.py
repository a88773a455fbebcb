"""Randomised gradient checks over every training objective and the encoder."""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .encoder import Activation, EncoderConfig, EncoderParams, WatchedParams, forward, init_encoder, snapshot_of
from .gradcheck import ScalarFunction, grad_check
from .losses import Batch, BiasModel, DistillKind, LossConfig, afm_distance, bias_weight, dcl_loss, l2_distill_distance, total_loss
from .tensor import Tensor, reduce_sum, square
from .types import SessionMeta

_LOGGER = logging.getLogger(__name__)

Instance = tuple[ScalarFunction, list[np.ndarray]]
CaseBuilder = Callable[[np.random.Generator], Instance]


@dataclass(frozen=True)
class GradCase:
    name: str
    instances: int
    max_error: float


def _weights(rng: np.random.Generator, size: int, model: BiasModel) -> np.ndarray:
    metas = [
        SessionMeta(
            session_index=1,
            response_accuracy=float(rng.uniform(0.6, 1.0)),
            consistency=0.9,
            activation_fraction=float(rng.uniform(0.2, 0.8)),
        )
        for _ in range(size)
    ]
    return np.array([bias_weight(model, meta) for meta in metas])


def _dcl_case(model: BiasModel, symmetric: bool = False) -> CaseBuilder:
    def build(rng: np.random.Generator) -> Instance:
        size, dim = int(rng.integers(2, 7)), int(rng.integers(2, 9))
        weights = _weights(rng, size, model)
        temperature = float(rng.uniform(0.1, 1.0))

        def loss(params: Sequence[Tensor]) -> Tensor:
            return dcl_loss(params[0], params[1], weights, temperature, symmetric=symmetric)

        return loss, [rng.standard_normal((size, dim)), rng.standard_normal((size, dim))]

    return build


def _distance_case(metric: Callable[[Tensor, Tensor], Tensor]) -> CaseBuilder:
    def build(rng: np.random.Generator) -> Instance:
        size, dim = int(rng.integers(1, 7)), int(rng.integers(2, 9))
        previous = Tensor(rng.standard_normal((size, dim)))

        def loss(params: Sequence[Tensor]) -> Tensor:
            return metric(previous, params[0])

        return loss, [rng.standard_normal((size, dim))]

    return build


def _small_encoder(rng: np.random.Generator) -> EncoderConfig:
    return EncoderConfig(
        input_dim=int(rng.integers(3, 7)),
        hidden_dim=int(rng.integers(3, 6)),
        tap_count=int(rng.integers(1, 4)),
        output_dim=int(rng.integers(2, 5)),
        activation=Activation.TANH,
        init_seed=int(rng.integers(0, 2**32)),
    )


def _encoder_case(rng: np.random.Generator) -> Instance:
    config = _small_encoder(rng)
    x = rng.standard_normal((int(rng.integers(1, 6)), config.input_dim))

    def loss(params: Sequence[Tensor]) -> Tensor:
        trace = forward(WatchedParams(config=config, tensors=tuple(params)), x)
        return reduce_sum(square(trace.output))

    return loss, init_encoder(config).arrays()


def _combined_case(kind: DistillKind) -> CaseBuilder:
    def build(rng: np.random.Generator) -> Instance:
        config = _small_encoder(rng)
        size = int(rng.integers(2, 6))
        batch = Batch(
            x=rng.standard_normal((size, config.input_dim)),
            c=rng.standard_normal((size, config.output_dim)),
            weights=_weights(rng, size, BiasModel.RESPONSE_ACCURACY),
        )
        previous = [a + 0.1 * rng.standard_normal(a.shape) for a in init_encoder(config).arrays()]
        snapshot = snapshot_of(EncoderParams.from_arrays(config, previous), step=1)
        cfg = LossConfig(temperature=0.2, lambda_cl=float(rng.uniform(0.5, 2.0)), distill=kind)

        def loss(params: Sequence[Tensor]) -> Tensor:
            return total_loss(batch, WatchedParams(config=config, tensors=tuple(params)), snapshot, cfg)

        return loss, init_encoder(config).arrays()

    return build


CASES: dict[str, CaseBuilder] = {
    "dcl_response_accuracy": _dcl_case(BiasModel.RESPONSE_ACCURACY),
    "dcl_brain_activation": _dcl_case(BiasModel.BRAIN_ACTIVATION),
    "dcl_symmetric": _dcl_case(BiasModel.RESPONSE_ACCURACY, symmetric=True),
    "afm_distance": _distance_case(afm_distance),
    "l2_distill_distance": _distance_case(l2_distill_distance),
    "encoder_forward": _encoder_case,
    "total_loss_afm": _combined_case(DistillKind.AFM),
    "total_loss_l2": _combined_case(DistillKind.L2),
}


def run_gradient_suite(instances: int = 20, seed: int = 0, epsilon: float = 1e-6) -> tuple[GradCase, ...]:
    results: list[GradCase] = []
    for index, (name, build) in enumerate(CASES.items()):
        rng = np.random.Generator(np.random.Philox(np.random.SeedSequence([seed, index])))
        worst = 0.0
        for _ in range(instances):
            loss, params = build(rng)
            worst = max(worst, grad_check(loss, params, epsilon=epsilon))
        results.append(GradCase(name=name, instances=instances, max_error=worst))
        _LOGGER.info(
            "grad_case_checked",
            extra={"event": "grad_case_checked", "case": name, "instances": instances, "max_relative_error": worst},
        )
    return tuple(results)


__all__ = ["CASES", "GradCase", "run_gradient_suite"]
