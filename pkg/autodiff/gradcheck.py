"""Comprobación de gradientes por diferencias centrales (float64)."""

from __future__ import annotations

from typing import Callable, Sequence

import numpy as np

from .tensor import Tensor, backward_grads


def numeric_grad(fn: Callable[[], Tensor], target: Tensor, h: float = 1e-5) -> np.ndarray:
    """∂fn/∂target por diferencias centrales; ``fn`` relee ``target.data``."""
    grad = np.zeros_like(target.data, dtype=np.float64)
    flat = target.data.reshape(-1)
    out = grad.reshape(-1)
    # sin no_grad: fn puede contener su propio bucle interno con gradientes
    for i in range(flat.size):
        orig = flat[i]
        flat[i] = orig + h
        plus = float(fn().data.sum())
        flat[i] = orig - h
        minus = float(fn().data.sum())
        flat[i] = orig
        out[i] = (plus - minus) / (2.0 * h)
    return grad


def relative_error(analytic: np.ndarray, numeric: np.ndarray) -> float:
    num = np.max(np.abs(analytic - numeric))
    den = max(np.max(np.abs(analytic)), np.max(np.abs(numeric)), 1e-8)
    return float(num / den)


def gradcheck(fn: Callable[[], Tensor], inputs: Sequence[Tensor], h: float = 1e-5, tol: float = 1e-4) -> float:
    """Máximo error relativo entre el gradiente analítico y el numérico.

    Lanza ``AssertionError`` si supera ``tol``.
    """
    loss = fn()
    if loss.size != 1:
        loss = loss.sum()
    analytic = backward_grads(loss, inputs)
    worst = 0.0
    for tensor, g in zip(inputs, analytic):
        err = relative_error(g.data, numeric_grad(fn, tensor, h))
        worst = max(worst, err)
    if worst > tol:
        raise AssertionError(f"gradcheck: error relativo {worst:.3e} > {tol:.1e}")
    return worst
