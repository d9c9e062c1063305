# metalearn/services/runner.py
"""Una ejecución completa de una condición (pretrain, finetune o meta).

Estructura del directorio de la ejecución::

    <run>/config.ini                configuración efectiva (antes de calcular nada)
    <run>/dataset_hash.txt          hash del dataset usado
    <run>/train_log.csv             una fila por época
    <run>/checkpoints/epoch_NNN.msps (+ _bn.msps) cada ``checkpoint_every`` épocas
    <run>/final.msps, final_bn.msps
    <run>/predictions/<clip>_segNN.csv  una por segmento de consulta
    <run>/adaptation.csv            pérdida de consulta antes/después de adaptar
    <run>/metrics.csv               una fila por sala de test + Overall
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Dict, List, Tuple

import numpy as np
import pandas as pd
from billiard import Pool

from autodiff.params import ParamSet, load_paramset, save_paramset
from core.datasets import read_dataset_hash
from core.exceptions import DatasetError
from core.seeding import substream
from seld.services.evaluation import finalize_rooms, write_metrics_csv
from seld.services.metrics import MetricsReport
from seld.services.targets import write_prediction_csv

from .baselines import pretrain
from .config import MetaConfig, RunConfig
from .engine import meta_step, meta_test
from .learners import CrnnLearner
from .sampling import check_rooms, load_room_segments, sample_task_batch

logger = logging.getLogger(__name__)


@dataclass
class RunResult:
    run_dir: Path
    condition: str
    dataset_hash: str
    reports: Dict[str, MetricsReport] = field(default_factory=dict)
    epochs: int = 0
    query_losses: Dict[str, Tuple[float, float]] = field(default_factory=dict)

    @property
    def resumen(self) -> str:
        head = f"{self.condition}: {self.epochs} épocas, {len(self.query_losses)} salas de test -> {self.run_dir}"
        overall = self.reports.get("Overall")
        if overall is None:
            return head
        return f"{head}; Overall E_SELD {overall.e_seld:.3f}"


def checkpoint_paths(path: Path) -> Tuple[Path, Path]:
    """(parámetros, estadísticas) para un fichero ``.msps`` o un directorio de ejecución."""
    path = Path(path)
    if path.is_dir():
        path = path / "final.msps"
    return path, path.with_name(f"{path.stem}_bn.msps")


def save_checkpoint(path: Path, params: ParamSet, buffers: ParamSet) -> Path:
    params_path, buffers_path = checkpoint_paths(path)
    save_paramset(params, params_path)
    save_paramset(buffers, buffers_path)
    return params_path


def load_checkpoint(path: Path) -> Tuple[ParamSet, ParamSet]:
    params_path, buffers_path = checkpoint_paths(path)
    return load_paramset(params_path, requires_grad=True), load_paramset(buffers_path)


class _TrainLog:
    """train_log.csv reescrito al cerrar cada época."""

    def __init__(self, path: Path):
        self.path = path
        self.rows: List[Dict] = []

    def add(self, **row):
        self.rows.append(row)
        pd.DataFrame(self.rows).to_csv(self.path, index=False)


def _meta_train(cfg: RunConfig, learner: CrnnLearner, params, buffers, train_rooms, run_dir: Path, log: _TrainLog):
    meta: MetaConfig = cfg.meta
    check_rooms(train_rooms, meta.samples_per_room)
    rng = substream(cfg.seed, "task-sampling")
    steps = meta.steps_per_epoch(sum(len(s) for s in train_rooms.values()))
    logger.info("Meta-entrenamiento: %d épocas x %d pasos", meta.epochs, steps)
    state = None
    for epoch in range(meta.epochs):
        lr = meta.meta_lr_at(epoch)
        losses, per_task = [], np.zeros(meta.rooms_per_batch)
        for _ in range(steps):
            tasks = sample_task_batch(train_rooms, meta, rng)
            res = meta_step(learner, params, buffers, tasks, meta, state, lr=lr)
            params, buffers, state = res.params, res.buffers, res.opt_state
            losses.append(res.log.meta_loss)
            per_task += np.asarray(res.log.task_losses)
        per_task /= steps
        log.add(
            epoch=epoch,
            lr=lr,
            meta_loss=float(np.mean(losses)),
            **{f"task{i}_loss": float(v) for i, v in enumerate(per_task)},
        )
        logger.info("época %d: lr %.2e pérdida meta %.5f", epoch, lr, float(np.mean(losses)))
        if (epoch + 1) % cfg.checkpoint_every == 0:
            save_checkpoint(run_dir / "checkpoints" / f"epoch_{epoch + 1:03d}.msps", params, buffers)
    return params, buffers


def _pretrain(cfg: RunConfig, learner: CrnnLearner, params, buffers, train_rooms, run_dir: Path, log: _TrainLog):
    items = [seg for room in sorted(train_rooms) for seg in train_rooms[room]]

    def on_epoch(epoch, lr, loss, p, b):
        log.add(epoch=epoch, lr=lr, loss=loss)
        if (epoch + 1) % cfg.checkpoint_every == 0:
            save_checkpoint(run_dir / "checkpoints" / f"epoch_{epoch + 1:03d}.msps", p, b)

    res = pretrain(learner, params, buffers, items, cfg.pretrain, substream(cfg.seed, "pretrain"), on_epoch=on_epoch)
    logger.info(res.resumen)
    return res.params, res.buffers


def _meta_test_job(job: Dict) -> Dict:
    """Adaptación y evaluación de una sala de test (proceso del pool)."""
    learner = CrnnLearner(job["model"])
    params = ParamSet.from_arrays(job["params"], requires_grad=True)
    buffers = ParamSet.from_arrays(job["buffers"])
    res = meta_test(
        learner,
        params,
        buffers,
        job["room_id"],
        job["segments"],
        job["meta"],
        act_threshold=job["act_threshold"],
        segment_seconds=job["segment_seconds"],
    )
    return {
        "room_id": res.room_id,
        "accumulator": res.accumulator,
        "predictions": res.predictions,
        "before": res.query_loss_before,
        "after": res.query_loss_after,
    }


def _evaluate_rooms(cfg: RunConfig, meta: MetaConfig, params, buffers, test_rooms) -> List[Dict]:
    jobs = [
        {
            "model": cfg.model,
            "params": params.arrays(),
            "buffers": buffers.arrays(),
            "room_id": room,
            "segments": test_rooms[room],
            "meta": meta,
            "act_threshold": cfg.act_threshold,
            "segment_seconds": cfg.segment_seconds,
        }
        for room in sorted(test_rooms)
    ]
    if cfg.workers > 1:
        with Pool(processes=cfg.workers) as pool:
            return pool.map(_meta_test_job, jobs)
    return [_meta_test_job(job) for job in jobs]


def run_condition(cfg: RunConfig) -> RunResult:
    dataset_hash = read_dataset_hash(cfg.dataset_dir)
    run_dir = cfg.out_dir
    run_dir.mkdir(parents=True, exist_ok=True)
    cfg.write(run_dir)
    (run_dir / "dataset_hash.txt").write_text(dataset_hash + "\n", encoding="ascii")

    segments = load_room_segments(cfg.dataset_dir, cfg.cache_dir, cfg.segment_seconds)
    train_rooms, test_rooms = segments.get("train", {}), segments.get("test", {})
    if not test_rooms:
        raise DatasetError(f"{cfg.dataset_dir}: el dataset no tiene salas de test")

    learner = CrnnLearner(cfg.model)
    params, buffers = learner.init(substream(cfg.seed, "init"))
    log = _TrainLog(run_dir / "train_log.csv")
    res = RunResult(run_dir, cfg.condition, dataset_hash)

    if cfg.condition == "meta":
        if not train_rooms:
            raise DatasetError(f"{cfg.dataset_dir}: el dataset no tiene salas de entrenamiento")
        params, buffers = _meta_train(cfg, learner, params, buffers, train_rooms, run_dir, log)
        res.epochs = cfg.meta.epochs
        test_meta = cfg.meta
    else:
        if cfg.pretrained_checkpoint is not None:
            params, buffers = load_checkpoint(cfg.pretrained_checkpoint)
            logger.info("Pesos pre-entrenados cargados de %s", cfg.pretrained_checkpoint)
        elif train_rooms:
            params, buffers = _pretrain(cfg, learner, params, buffers, train_rooms, run_dir, log)
            res.epochs = cfg.pretrain.epochs
        else:
            raise DatasetError(f"{cfg.dataset_dir}: el dataset no tiene salas de entrenamiento")
        # la columna de pre-entrenamiento es Θ sin adaptar
        test_meta = cfg.meta if cfg.condition == "finetune" else replace(cfg.meta, inner_steps=0)
    save_checkpoint(run_dir / "final.msps", params, buffers)

    accumulators, adaptation = {}, []
    for done in _evaluate_rooms(cfg, test_meta, params, buffers, test_rooms):
        room = done["room_id"]
        accumulators[room] = done["accumulator"]
        res.query_losses[room] = (done["before"], done["after"])
        adaptation.append({"room": room, "query_loss_before": done["before"], "query_loss_after": done["after"]})
        for name, ann in done["predictions"].items():
            write_prediction_csv(run_dir / "predictions" / f"{name}.csv", ann)
    pd.DataFrame(adaptation).to_csv(run_dir / "adaptation.csv", index=False)
    res.reports = finalize_rooms(accumulators, cfg.model.n_classes)
    write_metrics_csv(run_dir / "metrics.csv", res.reports)
    logger.info(res.resumen)
    return res


def default_run_dir(work_dir: Path, condition: str, seed: int) -> Path:
    return Path(work_dir) / "runs" / f"{condition}_seed{seed}"
