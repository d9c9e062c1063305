# autodiff/optim.py
"""Gradientes sobre ParamSet y optimizadores funcionales (SGD, AdamW)."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Dict, Optional, Tuple

import numpy as np

from core.exceptions import NonFiniteError

from .params import ParamSet
from .tensor import Tensor, backward_grads

logger = logging.getLogger(__name__)


def grad(loss: Tensor, params: ParamSet, create_graph: bool = False) -> ParamSet:
    """Gradiente de una pérdida escalar respecto de cada parámetro.

    Un parámetro que no está conectado con la pérdida recibe gradiente cero.
    Con ``create_graph`` el cálculo queda registrado y el resultado se puede
    volver a derivar.
    """
    if not np.all(np.isfinite(loss.data)):
        raise NonFiniteError(f"pérdida no finita: {loss.item()}")
    grads = backward_grads(loss, params.tensors(), create_graph=create_graph)
    return ParamSet(zip(params.names(), grads))


def sgd_step(params: ParamSet, grads: ParamSet, lr: float, keep_graph: bool = False) -> ParamSet:
    """Θ' = Θ - lr·g, sin tocar ``params``.

    Con ``keep_graph`` el resultado sigue conectado a Θ (MAML de segundo
    orden); si no, son hojas nuevas con ``requires_grad``.
    """
    params.check_aligned(grads, "sgd_step")
    if keep_graph:
        return ParamSet((k, p - lr * grads[k]) for k, p in params.items())
    return ParamSet(
        (k, Tensor(p.data - np.asarray(lr, dtype=p.dtype) * grads[k].data.astype(p.dtype, copy=False), requires_grad=True))
        for k, p in params.items()
    )


@dataclass
class AdamWState:
    """Momentos de primer/segundo orden y contador de pasos."""

    m: Dict[str, np.ndarray] = field(default_factory=dict)
    v: Dict[str, np.ndarray] = field(default_factory=dict)
    step: int = 0

    @classmethod
    def zeros_like(cls, params: ParamSet) -> "AdamWState":
        return cls(
            m={k: np.zeros(t.shape) for k, t in params.items()},
            v={k: np.zeros(t.shape) for k, t in params.items()},
            step=0,
        )


def adamw_step(
    state: Optional[AdamWState],
    params: ParamSet,
    grads: ParamSet,
    lr: float,
    betas: Tuple[float, float] = (0.9, 0.999),
    eps: float = 1e-8,
    weight_decay: float = 0.01,
) -> Tuple[AdamWState, ParamSet]:
    """Un paso de AdamW (decaimiento desacoplado, fórmula de PyTorch).

    θ ← θ·(1 - lr·wd);  m ← β1·m + (1-β1)·g;  v ← β2·v + (1-β2)·g²
    θ ← θ - lr·m̂/(√v̂ + eps) con corrección de sesgo.
    Devuelve un estado y un ParamSet nuevos.
    """
    params.check_aligned(grads, "adamw_step")
    if state is None:
        state = AdamWState.zeros_like(params)
    beta1, beta2 = betas
    step = state.step + 1
    bc1 = 1.0 - beta1 ** step
    bc2 = 1.0 - beta2 ** step
    new_m, new_v, entries = {}, {}, []
    for name, p in params.items():
        g = grads[name].data.astype(np.float64)
        m = beta1 * state.m[name] + (1.0 - beta1) * g
        v = beta2 * state.v[name] + (1.0 - beta2) * g * g
        theta = p.data.astype(np.float64) * (1.0 - lr * weight_decay)
        theta = theta - lr * (m / bc1) / (np.sqrt(v / bc2) + eps)
        new_m[name] = m
        new_v[name] = v
        entries.append((name, Tensor(theta.astype(p.dtype), requires_grad=True)))
    return AdamWState(m=new_m, v=new_v, step=step), ParamSet(entries)
