# reports/services/tables.py
"""Tabla comparativa de condiciones: una fila por sala de test y Overall.

Columnas ``<condición>.<métrica>`` en el orden pretrain, finetune, meta. Varias
ejecuciones de una misma condición (semillas) se promedian; ejecuciones con
datasets distintos no se mezclan nunca.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Sequence

import numpy as np
import pandas as pd
from openpyxl import Workbook

from core.config import load_sections
from core.datasets import read_dataset_hash
from core.exceptions import DatasetError, MetricsError, ReportMergeError
from metalearn.services.config import CONDITIONS
from seld.services.evaluation import METRIC_COLUMNS, OVERALL, read_metrics_csv
from seld.services.metrics import e_seld

logger = logging.getLogger(__name__)

E_SELD_TOL = 1e-9


@dataclass
class RunSummary:
    run_dir: Path
    condition: str
    seed: int
    dataset_hash: str
    metrics: pd.DataFrame = field(repr=False)

    @property
    def label(self) -> str:
        return f"{self.condition} (semilla {self.seed})"


def check_e_seld(metrics: pd.DataFrame, source: Path) -> None:
    """Cada fila de ``metrics.csv`` debe cumplir la fórmula de E_SELD."""
    for row in metrics.to_dict("records"):
        try:
            expected = e_seld(row["er20"], row["f20"], row["le_cd"], row["lr_cd"])
        except MetricsError as exc:
            raise ReportMergeError(f"{source}: fila {row['room']}: {exc}") from exc
        if abs(expected - row["e_seld"]) > E_SELD_TOL:
            raise ReportMergeError(
                f"{source}: E_SELD de {row['room']} es {row['e_seld']}, las métricas dan {expected}"
            )


def read_run(run_dir: Path) -> RunSummary:
    run_dir = Path(run_dir)
    if not (run_dir / "config.ini").exists():
        raise DatasetError(f"{run_dir}: no es un directorio de ejecución (falta config.ini)")
    sections = load_sections(run_dir / "config.ini")
    metrics = read_metrics_csv(run_dir / "metrics.csv")
    check_e_seld(metrics, run_dir / "metrics.csv")
    return RunSummary(
        run_dir=run_dir,
        condition=str(sections["run"]["condition"]),
        seed=int(sections["run"]["seed"]),
        dataset_hash=read_dataset_hash(run_dir),
        metrics=metrics,
    )


def check_same_dataset(runs: Sequence[RunSummary]) -> str:
    hashes = sorted({r.dataset_hash for r in runs})
    if len(hashes) > 1:
        detail = ", ".join(f"{r.run_dir.name}={r.dataset_hash[:12]}" for r in runs)
        raise ReportMergeError(f"Ejecuciones de datasets distintos: {detail}")
    return hashes[0]


def _room_order(rooms) -> List[str]:
    return sorted(r for r in rooms if r != OVERALL) + ([OVERALL] if OVERALL in rooms else [])


def build_table(runs: Sequence[RunSummary]) -> pd.DataFrame:
    """Promedio por condición y sala; índice = sala, columnas ``cond.métrica``."""
    if not runs:
        raise ReportMergeError("No hay ejecuciones que comparar")
    check_same_dataset(runs)
    frames = []
    for run in runs:
        df = run.metrics.copy()
        df["condition"] = run.condition
        frames.append(df)
    pooled = pd.concat(frames, ignore_index=True)
    mean = pooled.groupby(["condition", "room"])[METRIC_COLUMNS].mean()

    conditions = [c for c in CONDITIONS if c in set(pooled["condition"])]
    rooms = _room_order(set(pooled["room"]))
    table = pd.DataFrame(index=pd.Index(rooms, name="room"))
    for cond in conditions:
        part = mean.loc[cond].reindex(rooms)
        for metric in METRIC_COLUMNS:
            table[f"{cond}.{metric}"] = part[metric]
    return table


def condition_counts(runs: Sequence[RunSummary]) -> Dict[str, int]:
    counts: Dict[str, int] = {}
    for run in runs:
        counts[run.condition] = counts.get(run.condition, 0) + 1
    return counts


def write_table_csv(table: pd.DataFrame, path: Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    table.to_csv(path)
    return path


def write_workbook(table: pd.DataFrame, path: Path) -> Path:
    """Una hoja por métrica; filas = salas, columnas = condiciones."""
    wb = Workbook()
    wb.remove(wb.active)
    conditions = list(dict.fromkeys(col.split(".")[0] for col in table.columns))
    for metric in METRIC_COLUMNS:
        ws = wb.create_sheet(metric)
        ws.append(["room", *conditions])
        for room, row in table.iterrows():
            values = [row.get(f"{cond}.{metric}", np.nan) for cond in conditions]
            ws.append([room, *[None if pd.isna(v) else float(v) for v in values]])
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    wb.save(path)
    return path
