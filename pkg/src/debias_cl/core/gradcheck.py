"""Central finite-difference check of tape gradients."""

from __future__ import annotations

import logging
from typing import Callable, Sequence

import numpy as np

from .errors import DomainError, NumericFailure
from .tensor import GradTape, Tensor

_LOGGER = logging.getLogger(__name__)

ScalarFunction = Callable[[Sequence[Tensor]], Tensor]


def analytic_gradients(f: ScalarFunction, params: Sequence[np.ndarray]) -> list[np.ndarray]:
    with GradTape() as tape:
        leaves = [tape.watch(np.asarray(p, dtype=np.float64)) for p in params]
        loss = f(leaves)
        tape.backward(loss)
        return [tape.gradient(leaf).copy() for leaf in leaves]


def _evaluate(f: ScalarFunction, values: Sequence[np.ndarray]) -> float:
    return f([Tensor(v) for v in values]).item()


def grad_check(f: ScalarFunction, params: Sequence[np.ndarray], epsilon: float = 1e-6) -> float:
    """Return the worst relative error between tape and central-difference gradients.

    The error per entry is ``|analytic - numeric| / max(1, |analytic|, |numeric|)``.
    """

    if not 0.0 < epsilon <= 1e-3:
        raise DomainError(f"epsilon must lie in (0, 1e-3], got {epsilon}")
    base = [np.array(p, dtype=np.float64) for p in params]
    analytic = analytic_gradients(f, base)
    worst = 0.0
    for param_index, value in enumerate(base):
        flat = value.reshape(-1)
        grad_flat = analytic[param_index].reshape(-1)
        for entry in range(flat.size):
            original = flat[entry]
            flat[entry] = original + epsilon
            f_plus = _evaluate(f, base)
            flat[entry] = original - epsilon
            f_minus = _evaluate(f, base)
            flat[entry] = original
            if not (np.isfinite(f_plus) and np.isfinite(f_minus)):
                raise NumericFailure("non-finite loss at perturbed point", param=param_index, entry=entry)
            numeric = (f_plus - f_minus) / (2.0 * epsilon)
            exact = float(grad_flat[entry])
            error = abs(exact - numeric) / max(1.0, abs(exact), abs(numeric))
            worst = max(worst, error)
    _LOGGER.debug(
        "grad_check_finished",
        extra={"event": "grad_check_finished", "params": len(base), "max_relative_error": worst},
    )
    return worst


__all__ = ["analytic_gradients", "grad_check"]
