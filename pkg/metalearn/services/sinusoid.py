# metalearn/services/sinusoid.py
"""Regresión de senos: comprobación de que el meta-aprendizaje aprende a adaptarse.

Cada tarea es y = A·sin(x + φ) con A ~ U[0.1, 5], φ ~ U[0, π], x ~ U[-5, 5].
Se compara un MLP 1-40-40-1 meta-entrenado con otro entrenado conjuntamente
sobre todas las tareas; ambos se adaptan igual (K ejemplos, N pasos de SGD) y
se mide el MSE en puntos nuevos de tareas no vistas.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import List, Optional, Tuple

import numpy as np

from autodiff.optim import adamw_step, grad
from autodiff.params import ParamSet
from core.seeding import substream

from .config import MetaConfig
from .engine import inner_adapt, meta_step
from .learners import MlpLearner
from .sampling import Task

logger = logging.getLogger(__name__)

AMPLITUDE_RANGE = (0.1, 5.0)
PHASE_RANGE = (0.0, np.pi)
X_RANGE = (-5.0, 5.0)


@dataclass(frozen=True)
class SineTask:
    amplitude: float
    phase: float

    @classmethod
    def sample(cls, rng: np.random.Generator) -> "SineTask":
        return cls(float(rng.uniform(*AMPLITUDE_RANGE)), float(rng.uniform(*PHASE_RANGE)))

    def __call__(self, x: np.ndarray) -> np.ndarray:
        return self.amplitude * np.sin(x + self.phase)

    def points(self, rng: np.random.Generator, n: int) -> List[Tuple[float, float]]:
        x = rng.uniform(*X_RANGE, size=n)
        return list(zip(x.tolist(), self(x).tolist()))


@dataclass(frozen=True)
class SineBenchmarkConfig:
    k_shot: int = 10
    query_size: int = 10
    inner_lr: float = 0.01
    inner_steps: int = 5
    meta_batch: int = 10
    meta_steps: int = 3000
    meta_lr: float = 0.001
    second_order: bool = False
    eval_tasks: int = 100
    eval_points: int = 100

    def meta_config(self) -> MetaConfig:
        return MetaConfig(
            rooms_per_batch=self.meta_batch,
            samples_per_room=self.k_shot + self.query_size,
            k_support=self.k_shot,
            q_query=self.query_size,
            inner_lr=self.inner_lr,
            inner_steps=self.inner_steps,
            meta_lr=self.meta_lr,
            second_order=self.second_order,
            weight_decay=0.0,
        )


@dataclass
class SineBenchmarkResult:
    maml_mse: float
    baseline_mse: float
    maml_unadapted_mse: float

    @property
    def ratio(self) -> float:
        return self.maml_mse / self.baseline_mse

    @property
    def resumen(self) -> str:
        return (
            f"MSE tras adaptar: meta {self.maml_mse:.3f} vs conjunto {self.baseline_mse:.3f} "
            f"(ratio {self.ratio:.2f}; meta sin adaptar {self.maml_unadapted_mse:.3f})"
        )


def sine_task_batch(rng: np.random.Generator, cfg: SineBenchmarkConfig) -> List[Task]:
    tasks = []
    for i in range(cfg.meta_batch):
        task = SineTask.sample(rng)
        pts = task.points(rng, cfg.k_shot + cfg.query_size)
        tasks.append(Task(room_id=f"sine{i}", support=tuple(pts[: cfg.k_shot]), query=tuple(pts[cfg.k_shot:])))
    return tasks


def meta_train_sine(learner: MlpLearner, params: ParamSet, cfg: SineBenchmarkConfig, rng: np.random.Generator) -> ParamSet:
    meta_cfg = cfg.meta_config()
    buffers, state = ParamSet(), None
    for step in range(cfg.meta_steps):
        res = meta_step(learner, params, buffers, sine_task_batch(rng, cfg), meta_cfg, state)
        params, state = res.params, res.opt_state
        if step % 500 == 0:
            logger.info("senos meta paso %d: pérdida media %.4f", step, res.log.meta_loss / cfg.meta_batch)
    return params


def joint_train_sine(learner: MlpLearner, params: ParamSet, cfg: SineBenchmarkConfig, rng: np.random.Generator) -> ParamSet:
    """Mismo número de pasos y de puntos por paso, sin distinguir tareas."""
    state = None
    for step in range(cfg.meta_steps):
        pts = [p for task in sine_task_batch(rng, cfg) for p in (*task.support, *task.query)]
        loss, _ = learner.loss(params, ParamSet(), learner.collate(pts), training=True)
        state, params = adamw_step(state, params, grad(loss, params), cfg.meta_lr, weight_decay=0.0)
        if step % 500 == 0:
            logger.info("senos conjunto paso %d: pérdida %.4f", step, loss.item())
    return params


def adapted_mse(
    learner: MlpLearner,
    params: ParamSet,
    cfg: SineBenchmarkConfig,
    rng: np.random.Generator,
    inner_steps: Optional[int] = None,
) -> float:
    """MSE medio sobre ``eval_tasks`` tareas tras adaptar con ``k_shot`` ejemplos."""
    steps = cfg.inner_steps if inner_steps is None else inner_steps
    errors = []
    for _ in range(cfg.eval_tasks):
        task = SineTask.sample(rng)
        support = learner.collate(task.points(rng, cfg.k_shot))
        adapted = inner_adapt(learner, params, support, cfg.inner_lr, steps)
        x = np.linspace(*X_RANGE, cfg.eval_points).reshape(-1, 1)
        pred = learner.predict(adapted.params, adapted.buffers, x)
        errors.append(float(np.mean((pred - task(x)) ** 2)))
    return float(np.mean(errors))


def run_sine_benchmark(seed: int = 0, cfg: SineBenchmarkConfig = SineBenchmarkConfig()) -> SineBenchmarkResult:
    learner = MlpLearner()
    init, _ = learner.init(substream(seed, "sine-init"))
    maml = meta_train_sine(learner, init, cfg, substream(seed, "sine-meta"))
    joint = joint_train_sine(learner, init, cfg, substream(seed, "sine-joint"))
    # mismas tareas de evaluación para los dos modelos
    res = SineBenchmarkResult(
        maml_mse=adapted_mse(learner, maml, cfg, substream(seed, "sine-eval")),
        baseline_mse=adapted_mse(learner, joint, cfg, substream(seed, "sine-eval")),
        maml_unadapted_mse=adapted_mse(learner, maml, cfg, substream(seed, "sine-eval"), inner_steps=0),
    )
    logger.info(res.resumen)
    return res
