# metalearn/services/engine.py
"""Bucle interno (adaptación por tarea), paso meta y meta-test.

Todas las funciones son puras respecto de Θ: devuelven conjuntos nuevos y
nunca modifican los parámetros ni las estadísticas que reciben. Con
``second_order`` el gradiente meta atraviesa los pasos internos; sin él se
toma en Θ_N y se aplica a Θ.

BatchNorm: la adaptación corre en modo entrenamiento sobre una copia de las
estadísticas de la tarea; las predicciones de la consulta usan esa copia en
modo evaluación. Las estadísticas meta nunca reciben lo que se acumula en
una tarea: el paso meta las devuelve intactas y sólo el pre-entrenamiento
las actualiza.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence

import numpy as np

from autodiff.optim import AdamWState, adamw_step, grad, sgd_step
from autodiff.params import ParamSet
from autodiff.tensor import no_grad
from core.annotations import Annotation
from core.exceptions import ConfigError, NonFiniteError
from seld.services.metrics import MetricsReport, SeldAccumulator
from seld.services.targets import decode, label_frames_per_segment

from .config import MetaConfig
from .learners import Batch, CrnnLearner, Learner
from .sampling import Task, split_support_query

logger = logging.getLogger(__name__)


@dataclass
class Adaptation:
    params: ParamSet
    buffers: ParamSet
    support_losses: List[float] = field(default_factory=list)


def inner_adapt(
    learner: Learner,
    params: ParamSet,
    support: Batch,
    inner_lr: float,
    inner_steps: int,
    buffers: Optional[ParamSet] = None,
    second_order: bool = False,
    room_id: str = "",
) -> Adaptation:
    """N pasos de SGD de lote completo sobre el soporte a partir de Θ.

    ``support_losses`` guarda la pérdida antes de cada paso. Con N = 0
    devuelve Θ tal cual.
    """
    if inner_steps < 0:
        raise ConfigError(f"inner_steps negativo: {inner_steps}")
    buffers = buffers.clone(requires_grad=False) if buffers is not None else ParamSet()
    current = params
    losses: List[float] = []
    for step in range(inner_steps):
        loss, buffers = learner.loss(current, buffers, support, training=True)
        losses.append(loss.item())
        try:
            grads = grad(loss, current, create_graph=second_order)
        except NonFiniteError as exc:
            raise NonFiniteError(f"sala {room_id or '?'}, paso interno {step}: {exc}") from exc
        current = sgd_step(current, grads, inner_lr, keep_graph=second_order)
    return Adaptation(current, buffers, losses)


def finetune(
    learner: Learner,
    params: ParamSet,
    support: Batch,
    inner_lr: float = 0.01,
    inner_steps: int = 5,
    buffers: Optional[ParamSet] = None,
) -> Adaptation:
    """Fine-tuning desde pesos pre-entrenados: el mismo camino que el bucle interno."""
    return inner_adapt(learner, params, support, inner_lr, inner_steps, buffers=buffers)


@dataclass
class MetaStepLog:
    rooms: List[str] = field(default_factory=list)
    task_losses: List[float] = field(default_factory=list)
    support_losses: List[List[float]] = field(default_factory=list)

    @property
    def meta_loss(self) -> float:
        """Suma de las pérdidas de consulta de las tareas del lote."""
        return float(sum(self.task_losses))


@dataclass
class MetaGradient:
    grads: ParamSet
    buffers: ParamSet
    log: MetaStepLog


def meta_gradient(
    learner: Learner,
    params: ParamSet,
    buffers: ParamSet,
    tasks: Sequence[Task],
    cfg: MetaConfig,
) -> MetaGradient:
    """∇Θ Σ_i L(f_{Θ_i,N}, Q_i) sumado en el orden de las tareas."""
    log = MetaStepLog()
    total: Optional[ParamSet] = None
    for task in tasks:
        support = learner.collate(task.support)
        query = learner.collate(task.query)
        adapted = inner_adapt(
            learner,
            params,
            support,
            cfg.inner_lr,
            cfg.inner_steps,
            buffers=buffers,
            second_order=cfg.second_order,
            room_id=task.room_id,
        )
        loss, _ = learner.loss(adapted.params, adapted.buffers, query, training=True)
        try:
            g = grad(loss, params if cfg.second_order else adapted.params)
        except NonFiniteError as exc:
            raise NonFiniteError(f"sala {task.room_id}, consulta: {exc}") from exc
        with no_grad():
            total = g if total is None else total + g
        log.rooms.append(task.room_id)
        log.task_losses.append(loss.item())
        log.support_losses.append(adapted.support_losses)
    if total is None:
        raise ConfigError("meta_step sin tareas")
    return MetaGradient(total, buffers, log)


@dataclass
class MetaStepResult:
    params: ParamSet
    buffers: ParamSet
    opt_state: AdamWState
    log: MetaStepLog


def meta_step(
    learner: Learner,
    params: ParamSet,
    buffers: ParamSet,
    tasks: Sequence[Task],
    cfg: MetaConfig,
    opt_state: Optional[AdamWState] = None,
    lr: Optional[float] = None,
) -> MetaStepResult:
    """Un paso de AdamW sobre Θ con el gradiente meta del lote de tareas."""
    mg = meta_gradient(learner, params, buffers, tasks, cfg)
    state, new_params = adamw_step(
        opt_state,
        params,
        mg.grads,
        cfg.meta_lr if lr is None else lr,
        betas=cfg.betas,
        eps=cfg.eps,
        weight_decay=cfg.weight_decay,
    )
    logger.debug("meta_step %s: pérdida %.5f", ",".join(mg.log.rooms), mg.log.meta_loss)
    return MetaStepResult(new_params, mg.buffers, state, mg.log)


@dataclass
class MetaTestResult:
    room_id: str
    report: Optional[MetricsReport]
    accumulator: SeldAccumulator
    adaptation: Adaptation
    predictions: Dict[str, Annotation] = field(default_factory=dict)
    query_loss_before: float = float("nan")
    query_loss_after: float = float("nan")
    support: List[str] = field(default_factory=list)

    @property
    def resumen(self) -> str:
        head = f"{self.room_id}: consulta {self.query_loss_before:.4f} -> {self.query_loss_after:.4f}"
        if self.report is None:
            return head
        return f"{head}, E_SELD {self.report.e_seld:.3f}"


def _query_loss(learner: Learner, params: ParamSet, buffers: ParamSet, batch: Batch) -> float:
    with no_grad():
        loss, _ = learner.loss(params, buffers, batch, training=False)
    return loss.item()


def meta_test(
    learner: CrnnLearner,
    params: ParamSet,
    buffers: ParamSet,
    room_id: str,
    segments: Sequence,
    cfg: MetaConfig,
    act_threshold: float = 0.5,
    segment_seconds: float = 5.0,
    batch_size: int = 16,
) -> MetaTestResult:
    """Adapta Θ con los primeros ``k_support`` segmentos y evalúa el resto.

    ``segments`` viene ordenado por nombre de clip. Con ``inner_steps`` = 0
    se evalúa Θ sin adaptar (condición de pre-entrenamiento).
    """
    task = split_support_query(room_id, segments, cfg.k_support)
    adapted = inner_adapt(
        learner,
        params,
        learner.collate(task.support),
        cfg.inner_lr,
        cfg.inner_steps,
        buffers=buffers,
        room_id=room_id,
    )
    acc = SeldAccumulator(n_classes=learner.cfg.n_classes)
    n_label = label_frames_per_segment(segment_seconds)
    res = MetaTestResult(room_id, None, acc, adapted, support=[s.name for s in task.support])
    before, after, weights = [], [], []
    for start in range(0, len(task.query), batch_size):
        chunk = task.query[start:start + batch_size]
        batch = learner.collate(chunk)
        before.append(_query_loss(learner, params, buffers, batch))
        after.append(_query_loss(learner, adapted.params, adapted.buffers, batch))
        weights.append(len(chunk))
        preds = learner.predict(adapted.params, adapted.buffers, batch[0])
        for seg, pred in zip(chunk, preds):
            ann = decode(pred, act_threshold, n_label_frames=n_label, time_pool=learner.cfg.time_pool)
            res.predictions[seg.name] = ann
            acc.add_annotations(seg.annotation, ann)
    res.query_loss_before = float(np.average(before, weights=weights))
    res.query_loss_after = float(np.average(after, weights=weights))
    if acc.n_ref:
        res.report = acc.finalize()
    logger.info(res.resumen)
    return res
