"""Finite-difference verification of analytic gradients."""

from __future__ import annotations

from typing import Callable, Mapping

import numpy as np

from .tensor import Tensor, backward


def grad_check(
    model_fn: Callable[[], Tensor],
    params: Mapping[str, Tensor],
    h: float = 1e-4,
    tol: float = 1e-4,
) -> dict:
    """Compare analytic gradients against central finite differences.

    ``model_fn`` must be deterministic (dropout off) and return a scalar
    loss built from ``params``. Returns a report with the max relative
    error per parameter and an overall pass flag.
    """
    for p in params.values():
        p.zero_grad()
    loss = model_fn()
    backward(loss)
    analytic = {}
    for name, p in params.items():
        analytic[name] = np.zeros_like(p.data) if p.grad is None else p.grad.copy()

    errors: dict[str, float] = {}
    for name, p in params.items():
        flat = p.data.reshape(-1)
        numeric = np.zeros(flat.size)
        for i in range(flat.size):
            orig = flat[i]
            flat[i] = orig + h
            up = float(model_fn().data)
            flat[i] = orig - h
            down = float(model_fn().data)
            flat[i] = orig
            numeric[i] = (up - down) / (2.0 * h)
        a = analytic[name].reshape(-1)
        denom = np.maximum(np.abs(a) + np.abs(numeric), 1e-3)
        errors[name] = float(np.max(np.abs(a - numeric) / denom)) if flat.size else 0.0

    worst = max(errors.values()) if errors else 0.0
    return {
        "per_param": errors,
        "max_rel_error": worst,
        "tol": tol,
        "passed": worst < tol,
    }
