from __future__ import annotations

import math

import numpy as np
import pytest

from debias_cl.core.errors import DimensionError, DomainError, NumericFailure
from debias_cl.runtime.optim import AdamWConfig, AdamWState, adamw_update, cosine_lr


def test_cosine_schedule_values() -> None:
    assert cosine_lr(0, 50, 2.5e-4) == pytest.approx(2.5e-4)
    assert cosine_lr(25, 50, 1.0) == pytest.approx(0.5)
    assert cosine_lr(49, 50, 1.0) == pytest.approx(0.5 * (1.0 + math.cos(math.pi * 49 / 50)))
    assert cosine_lr(49, 50, 1.0) > 0.0
    rates = [cosine_lr(epoch, 10, 1.0) for epoch in range(10)]
    assert all(a > b for a, b in zip(rates, rates[1:]))
    assert cosine_lr(0, 1, 0.1) == pytest.approx(0.1)


@pytest.mark.parametrize(("epoch", "total"), [(-1, 5), (5, 5), (0, 0)])
def test_cosine_schedule_rejects_bad_epochs(epoch: int, total: int) -> None:
    with pytest.raises(DomainError):
        cosine_lr(epoch, total, 1.0)


def test_first_adamw_step_matches_closed_form() -> None:
    params = [np.array([[1.0, -2.0]])]
    grads = [np.array([[0.5, -0.25]])]
    config = AdamWConfig(weight_decay=0.01)
    updated, state = adamw_update(params, grads, AdamWState.zeros_like(params), 0.1, config)
    g = grads[0]
    expected = params[0] - 0.1 * 0.01 * params[0] - 0.1 * g / (np.abs(g) + config.eps)
    np.testing.assert_allclose(updated[0], expected, rtol=1e-12)
    assert state.timestep == 1
    np.testing.assert_allclose(state.first_moment[0], 0.1 * g)
    np.testing.assert_allclose(state.second_moment[0], 0.001 * g * g)
    np.testing.assert_array_equal(params[0], [[1.0, -2.0]])


def test_zero_gradient_only_decays() -> None:
    params = [np.array([2.0, -4.0])]
    updated, _ = adamw_update(params, [np.zeros(2)], AdamWState.zeros_like(params), 0.5, AdamWConfig(weight_decay=0.1))
    np.testing.assert_allclose(updated[0], [1.9, -3.8])


def test_adamw_converges_on_a_quadratic() -> None:
    target = np.array([3.0, -1.0, 0.5])
    params = [np.zeros(3)]
    state = AdamWState.zeros_like(params)
    config = AdamWConfig(weight_decay=0.0)
    for _ in range(500):
        params, state = adamw_update(params, [2.0 * (params[0] - target)], state, 0.05, config)
    np.testing.assert_allclose(params[0], target, atol=5e-2)


def test_non_finite_gradient_is_reported() -> None:
    params = [np.zeros(2), np.zeros(3)]
    grads = [np.zeros(2), np.array([0.0, np.inf, 0.0])]
    with pytest.raises(NumericFailure) as excinfo:
        adamw_update(params, grads, AdamWState.zeros_like(params), 0.1)
    assert excinfo.value.coordinates == {"param": 1}


def test_shape_mismatch_is_rejected() -> None:
    params = [np.zeros(2)]
    with pytest.raises(DimensionError):
        adamw_update(params, [np.zeros(3)], AdamWState.zeros_like(params), 0.1)
    with pytest.raises(DimensionError):
        adamw_update(params, [], AdamWState.zeros_like(params), 0.1)


def test_optimizer_config_validation() -> None:
    with pytest.raises(DomainError):
        AdamWConfig(beta1=1.0)
    with pytest.raises(DomainError):
        AdamWConfig(eps=0.0)
    with pytest.raises(DomainError):
        AdamWConfig(weight_decay=-0.1)
