# seld/services/evaluation.py
"""Evaluación de árboles de CSV (referencias y predicciones) por sala.

Las predicciones pueden ser por clip (``<clip_id>.csv``, frames absolutos) o
por segmento (``<clip_id>_segNN.csv``, frames relativos al segmento); en el
segundo caso sólo se evalúa el tramo de referencia de ese segmento. El
"Overall" agrega los contadores de todas las salas (pooling ponderado por
recuentos), no promedia los informes.
"""

from __future__ import annotations

import logging
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, Iterable, Mapping, Optional

import pandas as pd

from core.annotations import read_annotation_csv
from core.datasets import read_manifest
from core.exceptions import DatasetError, MetricsError

from .metrics import MetricsReport, SeldAccumulator, merge_all
from .targets import N_CLASSES, segment_annotation

logger = logging.getLogger(__name__)

OVERALL = "Overall"
METRIC_COLUMNS = ["er20", "f20", "le_cd", "lr_cd", "e_seld"]
_SEGMENT_RE = re.compile(r"^(?P<clip>.+)_seg(?P<index>\d+)$")


@dataclass
class EvaluationResult:
    reports: Dict[str, MetricsReport] = field(default_factory=dict)
    accumulators: Dict[str, SeldAccumulator] = field(default_factory=dict)
    archivos: int = 0

    @property
    def overall(self) -> MetricsReport:
        return self.reports[OVERALL]

    @property
    def resumen(self) -> str:
        o = self.reports.get(OVERALL)
        head = f"{self.archivos} predicciones en {len(self.accumulators)} salas"
        if o is None:
            return head
        return f"{head}; Overall ER={o.er20:.3f} F={o.f20:.3f} LE={o.le_cd:.1f} LR={o.lr_cd:.3f} E_SELD={o.e_seld:.3f}"


def _locate(stem: str, clips: Mapping[str, str]):
    """(clip_id, índice de segmento o None) para el nombre de una predicción."""
    if stem in clips:
        return stem, None
    m = _SEGMENT_RE.match(stem)
    if m and m.group("clip") in clips:
        return m.group("clip"), int(m.group("index"))
    return None, None


def finalize_rooms(accumulators: Mapping[str, SeldAccumulator], n_classes: int = N_CLASSES) -> Dict[str, MetricsReport]:
    """Informe por sala más Overall; una sala sin referencias es un error de datos."""
    reports: Dict[str, MetricsReport] = {}
    for room in sorted(accumulators):
        try:
            reports[room] = accumulators[room].finalize()
        except MetricsError as exc:
            raise DatasetError(f"sala {room}: {exc}") from exc
    if accumulators:
        reports[OVERALL] = merge_all(accumulators.values(), n_classes).finalize()
    return reports


def evaluate_tree(
    ref_dir: Path,
    pred_dir: Path,
    manifest: Path,
    rooms: Optional[Iterable[str]] = None,
    segment_seconds: float = 5.0,
    n_classes: int = N_CLASSES,
) -> EvaluationResult:
    ref_dir, pred_dir = Path(ref_dir), Path(pred_dir)
    if not pred_dir.is_dir():
        raise DatasetError(f"Directorio de predicciones no encontrado: {pred_dir}")
    df = read_manifest(manifest)
    clips = dict(zip(df["clip_id"], df["room_id"]))
    wanted = set(rooms) if rooms is not None else None

    accs: Dict[str, SeldAccumulator] = {}
    refs_cache = {}
    res = EvaluationResult()
    for path in sorted(pred_dir.glob("*.csv")):
        clip_id, segment = _locate(path.stem, clips)
        if clip_id is None:
            logger.warning("Predicción sin clip en el manifest, se ignora: %s", path.name)
            continue
        room = clips[clip_id]
        if wanted is not None and room not in wanted:
            continue
        if clip_id not in refs_cache:
            refs_cache[clip_id] = read_annotation_csv(ref_dir / f"{clip_id}.csv")
        ref = refs_cache[clip_id]
        if segment is not None:
            ref = segment_annotation(ref, segment, segment_seconds)
        acc = accs.setdefault(room, SeldAccumulator(n_classes=n_classes))
        acc.add_annotations(ref, read_annotation_csv(path))
        res.archivos += 1

    res.accumulators = accs
    res.reports = finalize_rooms(accs, n_classes)
    logger.info(res.resumen)
    return res


def metrics_frame(reports: Mapping[str, MetricsReport]) -> pd.DataFrame:
    rows = [{"room": room, **rep.as_row()} for room, rep in reports.items() if room != OVERALL]
    if OVERALL in reports:
        rows.append({"room": OVERALL, **reports[OVERALL].as_row()})
    return pd.DataFrame(rows, columns=["room"] + METRIC_COLUMNS)


def write_metrics_csv(path: Path, reports: Mapping[str, MetricsReport]) -> Path:
    """Una fila por sala y una fila Overall al final."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    metrics_frame(reports).to_csv(path, index=False)
    return path


def read_metrics_csv(path: Path) -> pd.DataFrame:
    path = Path(path)
    if not path.exists():
        raise DatasetError(f"metrics.csv no encontrado: {path}")
    df = pd.read_csv(path, float_precision="round_trip")
    missing = [c for c in ["room"] + METRIC_COLUMNS if c not in df.columns]
    if missing:
        raise DatasetError(f"{path}: faltan columnas {missing}")
    return df
