# core/annotations.py
"""Anotaciones SELD en rejilla de 100 ms y su CSV sin cabecera.

Cada fila: ``frame,class,track,azimuth,elevation`` (enteros, grados). Las
predicciones usan el mismo formato con ``track`` siempre 0.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, Iterable, List, NamedTuple

import pandas as pd

from .exceptions import DatasetError

LABEL_HOP_S = 0.1
COLUMNS = ["frame", "class", "track", "azimuth", "elevation"]


class AnnotationRow(NamedTuple):
    frame: int
    class_id: int
    track: int
    azimuth: float
    elevation: float


@dataclass
class Annotation:
    rows: List[AnnotationRow] = field(default_factory=list)

    def __post_init__(self):
        self.rows = sorted(AnnotationRow(*r) for r in self.rows)

    def __len__(self) -> int:
        return len(self.rows)

    def __iter__(self):
        return iter(self.rows)

    @property
    def empty(self) -> bool:
        return not self.rows

    def by_frame(self) -> Dict[int, List[AnnotationRow]]:
        out: Dict[int, List[AnnotationRow]] = {}
        for row in self.rows:
            out.setdefault(row.frame, []).append(row)
        return out

    def window(self, first_frame: int, n_frames: int) -> "Annotation":
        """Filas de ``[first_frame, first_frame + n_frames)`` con frames relativos."""
        last = first_frame + n_frames
        return Annotation(
            [r._replace(frame=r.frame - first_frame) for r in self.rows if first_frame <= r.frame < last]
        )

    def shifted(self, offset: int) -> "Annotation":
        return Annotation([r._replace(frame=r.frame + offset) for r in self.rows])

    def to_frame(self) -> pd.DataFrame:
        df = pd.DataFrame([tuple(r) for r in self.rows], columns=COLUMNS)
        return df.astype({"frame": int, "class": int, "track": int, "azimuth": float, "elevation": float})


def merge_annotations(parts: Iterable[Annotation]) -> Annotation:
    rows: List[AnnotationRow] = []
    for part in parts:
        rows.extend(part.rows)
    return Annotation(rows)


def write_annotation_csv(path: Path, ann: Annotation) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    df = ann.to_frame()
    df["azimuth"] = df["azimuth"].round().astype(int)
    df["elevation"] = df["elevation"].round().astype(int)
    df.to_csv(path, header=False, index=False)
    return path


def read_annotation_csv(path: Path) -> Annotation:
    path = Path(path)
    if not path.exists():
        raise DatasetError(f"Anotación no encontrada: {path}")
    if path.stat().st_size == 0:
        return Annotation()
    try:
        df = pd.read_csv(path, header=None, names=COLUMNS)
    except (pd.errors.ParserError, ValueError) as exc:
        raise DatasetError(f"{path}: CSV de anotación inválido ({exc})") from exc
    if df.isna().any().any():
        raise DatasetError(f"{path}: filas incompletas")
    return Annotation(
        AnnotationRow(int(frame), int(cls), int(track), float(az), float(el))
        for frame, cls, track, az, el in df.itertuples(index=False, name=None)
    )
