# metalearn/services/sampling.py
"""Segmentos por sala y muestreo de tareas (una sala = una tarea).

Los segmentos de cada sala se ordenan por nombre de clip y después por índice
de segmento; ``meta_test`` toma los primeros como soporte.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Mapping, Optional, Sequence, Tuple

import numpy as np

from core.annotations import Annotation, read_annotation_csv
from core.datasets import DatasetLayout, read_manifest, segment_name
from core.exceptions import DatasetError, FeatureCacheError, TaskSamplingError
from features.services.cache import load_feature_file
from features.services.extraction import read_index
from seld.services.targets import segment_annotation

from .config import MetaConfig

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class Segment:
    """Un segmento de 5 s: características en la caché y anotación relativa."""

    clip_id: str
    index: int
    room_id: str
    annotation: Annotation = field(compare=False)
    path: Optional[Path] = None
    data: Optional[np.ndarray] = field(default=None, compare=False, repr=False)

    @property
    def name(self) -> str:
        return segment_name(self.clip_id, self.index)

    def features(self) -> np.ndarray:
        if self.data is not None:
            return self.data
        if self.path is None:
            raise FeatureCacheError(f"segmento {self.name} sin fichero de características")
        return load_feature_file(self.path)


@dataclass(frozen=True)
class Task:
    room_id: str
    support: Tuple[Any, ...]
    query: Tuple[Any, ...]
    support_idx: Tuple[int, ...] = ()
    query_idx: Tuple[int, ...] = ()

    def __post_init__(self):
        if set(self.support_idx) & set(self.query_idx):
            raise TaskSamplingError(f"sala {self.room_id}: soporte y consulta se solapan")
        for item in (*self.support, *self.query):
            room = getattr(item, "room_id", self.room_id)
            if room != self.room_id:
                raise TaskSamplingError(f"tarea {self.room_id} con un ejemplo de la sala {room}")


def load_room_segments(
    dataset_dir: Path,
    cache_dir: Optional[Path] = None,
    segment_seconds: float = 5.0,
) -> Dict[str, Dict[str, List[Segment]]]:
    """{split: {room_id: [Segment, ...]}} a partir del manifest y de ``index.csv``."""
    layout = DatasetLayout(Path(dataset_dir))
    cache_dir = Path(cache_dir) if cache_dir else layout.default_cache()
    index = read_index(cache_dir)
    if index.empty:
        raise DatasetError(f"Caché sin índice en {cache_dir}: ejecute extract_features primero")
    n_segments = dict(zip(index["clip_id"], index["n_segments"].astype(int)))

    out: Dict[str, Dict[str, List[Segment]]] = {}
    for rec in read_manifest(layout.manifest).to_dict("records"):
        clip_id = rec["clip_id"]
        if clip_id not in n_segments:
            raise DatasetError(f"Clip {clip_id} ausente de la caché {cache_dir}")
        ann = read_annotation_csv(layout.annotation(clip_id))
        room = out.setdefault(rec["split"], {}).setdefault(rec["room_id"], [])
        for i in range(n_segments[clip_id]):
            room.append(
                Segment(
                    clip_id=clip_id,
                    index=i,
                    room_id=rec["room_id"],
                    annotation=segment_annotation(ann, i, segment_seconds),
                    path=cache_dir / f"{segment_name(clip_id, i)}.msld",
                )
            )
    for rooms in out.values():
        for segs in rooms.values():
            segs.sort(key=lambda s: (s.clip_id, s.index))
    logger.info(
        "Segmentos cargados: %s",
        ", ".join(f"{split}={sum(len(s) for s in rooms.values())}" for split, rooms in sorted(out.items())),
    )
    return out


def check_rooms(rooms: Mapping[str, Sequence], minimum: int) -> None:
    small = [f"{room} ({len(items)})" for room, items in sorted(rooms.items()) if len(items) < minimum]
    if small:
        raise TaskSamplingError(f"salas con menos de {minimum} segmentos: {', '.join(small)}")


def sample_task_batch(rooms: Mapping[str, Sequence], cfg: MetaConfig, rng: np.random.Generator) -> List[Task]:
    """``rooms_per_batch`` salas distintas; en cada una ``samples_per_room`` ejemplos sin reemplazo.

    Los primeros ``k_support`` sorteados forman el soporte y el resto la consulta.
    """
    names = sorted(rooms)
    if len(names) < cfg.rooms_per_batch:
        raise TaskSamplingError(f"hay {len(names)} salas y el lote pide {cfg.rooms_per_batch}")
    check_rooms(rooms, cfg.samples_per_room)
    tasks = []
    for pick in rng.choice(len(names), size=cfg.rooms_per_batch, replace=False):
        room = names[int(pick)]
        items = rooms[room]
        idx = rng.choice(len(items), size=cfg.samples_per_room, replace=False)
        support_idx = tuple(int(i) for i in idx[: cfg.k_support])
        query_idx = tuple(int(i) for i in idx[cfg.k_support:])
        tasks.append(
            Task(
                room_id=room,
                support=tuple(items[i] for i in support_idx),
                query=tuple(items[i] for i in query_idx),
                support_idx=support_idx,
                query_idx=query_idx,
            )
        )
    return tasks


def split_support_query(room_id: str, items: Sequence, k_support: int) -> Task:
    """Primeros ``k_support`` ejemplos como soporte y el resto como consulta."""
    if len(items) <= k_support:
        raise TaskSamplingError(f"sala {room_id}: {len(items)} segmentos, se necesitan más de {k_support}")
    return Task(
        room_id=room_id,
        support=tuple(items[:k_support]),
        query=tuple(items[k_support:]),
        support_idx=tuple(range(k_support)),
        query_idx=tuple(range(k_support, len(items))),
    )
