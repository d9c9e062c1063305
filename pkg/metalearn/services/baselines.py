# metalearn/services/baselines.py
"""Pre-entrenamiento supervisado convencional (AdamW por minilotes).

Sólo ve salas de entrenamiento; el fine-tuning posterior reutiliza
``engine.finetune``, que es el mismo bucle interno del meta-aprendizaje.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Callable, List, Optional, Sequence

import numpy as np

from autodiff.optim import AdamWState, adamw_step, grad
from autodiff.params import ParamSet
from core.exceptions import ConfigError, NonFiniteError

from .config import PretrainConfig
from .learners import Learner

logger = logging.getLogger(__name__)


@dataclass
class PretrainResult:
    params: ParamSet
    buffers: ParamSet
    opt_state: Optional[AdamWState] = None
    epoch_losses: List[float] = field(default_factory=list)
    epoch_lrs: List[float] = field(default_factory=list)

    @property
    def resumen(self) -> str:
        if not self.epoch_losses:
            return "pre-entrenamiento sin épocas"
        return (
            f"{len(self.epoch_losses)} épocas, pérdida {self.epoch_losses[0]:.4f} -> "
            f"{self.epoch_losses[-1]:.4f}"
        )


EpochCallback = Callable[[int, float, float, ParamSet, ParamSet], None]


def pretrain(
    learner: Learner,
    params: ParamSet,
    buffers: ParamSet,
    items: Sequence,
    cfg: PretrainConfig,
    rng: np.random.Generator,
    on_epoch: Optional[EpochCallback] = None,
) -> PretrainResult:
    """Entrena Θ sobre ``items`` barajados cada época.

    ``on_epoch(epoch, lr, loss_media, params, buffers)`` se llama al cerrar
    cada época (registro y checkpoints).
    """
    if not items:
        raise ConfigError("pre-entrenamiento sin ejemplos")
    res = PretrainResult(params, buffers)
    state = None
    for epoch in range(cfg.epochs):
        lr = cfg.lr_at(epoch)
        order = rng.permutation(len(items))
        losses, weights = [], []
        for start in range(0, len(order), cfg.batch_size):
            chunk = [items[i] for i in order[start:start + cfg.batch_size]]
            loss, buffers = learner.loss(params, buffers, learner.collate(chunk), training=True)
            try:
                grads = grad(loss, params)
            except NonFiniteError as exc:
                raise NonFiniteError(f"pre-entrenamiento, época {epoch}: {exc}") from exc
            state, params = adamw_step(
                state, params, grads, lr, betas=cfg.betas, eps=cfg.eps, weight_decay=cfg.weight_decay
            )
            losses.append(loss.item())
            weights.append(len(chunk))
        mean_loss = float(np.average(losses, weights=weights))
        res.epoch_losses.append(mean_loss)
        res.epoch_lrs.append(lr)
        logger.info("pretrain época %d: lr %.2e pérdida %.5f", epoch, lr, mean_loss)
        if on_epoch is not None:
            on_epoch(epoch, lr, mean_loss, params, buffers)
    res.params, res.buffers, res.opt_state = params, buffers, state
    return res
