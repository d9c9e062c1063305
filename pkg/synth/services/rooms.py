# synth/services/rooms.py
"""Salas paramétricas: cada sala es una tarea distinta para el meta-aprendizaje."""

from __future__ import annotations

import logging
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import List

import numpy as np
import pandas as pd

from core.exceptions import DatasetError
from core.seeding import derive_seed, substream

logger = logging.getLogger(__name__)

T60_RANGE = (0.0, 1.2)
SNR_RANGE = (6.0, 30.0)
DIFFUSE_RANGE = (0.0, 0.5)
SPLITS = ("train", "test")


@dataclass(frozen=True)
class RoomPreset:
    room_id: str
    t60: float
    snr_db: float
    diffuse_gain: float
    rng_seed: int  # entra en la semilla de cada clip de la sala
    split: str = "train"

    def __post_init__(self):
        if not self.room_id:
            raise DatasetError("RoomPreset sin room_id")
        if not T60_RANGE[0] <= self.t60 <= T60_RANGE[1]:
            raise DatasetError(f"{self.room_id}: t60 {self.t60} fuera de {T60_RANGE}")
        if not np.isfinite(self.snr_db) or not SNR_RANGE[0] <= self.snr_db <= SNR_RANGE[1]:
            raise DatasetError(f"{self.room_id}: snr_db {self.snr_db} fuera de {SNR_RANGE}")
        if not DIFFUSE_RANGE[0] <= self.diffuse_gain <= DIFFUSE_RANGE[1]:
            raise DatasetError(f"{self.room_id}: diffuse_gain {self.diffuse_gain} fuera de {DIFFUSE_RANGE}")
        if self.split not in SPLITS:
            raise DatasetError(f"{self.room_id}: split desconocido '{self.split}'")


def default_room_manifest(seed: int, train_rooms: int = 9, test_rooms: int = 7) -> List[RoomPreset]:
    """Salas de entrenamiento y de test repartidas por todo el rango de t60.

    t60 crece con el índice de sala; SNR y ganancia difusa se sortean por sala.
    """
    rng = substream(seed, "rooms")
    rooms: List[RoomPreset] = []
    for split, count, (lo, hi) in (("train", train_rooms, (0.15, 1.15)), ("test", test_rooms, (0.2, 1.1))):
        t60s = np.linspace(lo, hi, count) if count > 1 else np.array([(lo + hi) / 2])
        for i, t60 in enumerate(t60s, start=1):
            room_id = f"{split}_room{i:02d}"
            rooms.append(
                RoomPreset(
                    room_id=room_id,
                    t60=round(float(t60), 3),
                    snr_db=round(float(rng.uniform(12.0, 30.0)), 2),
                    diffuse_gain=round(float(rng.uniform(0.1, 0.5)), 3),
                    rng_seed=derive_seed(seed, "room", room_id),
                    split=split,
                )
            )
    return rooms


def check_unique(rooms: List[RoomPreset]) -> None:
    ids = [r.room_id for r in rooms]
    dupes = sorted({i for i in ids if ids.count(i) > 1})
    if dupes:
        raise DatasetError(f"room_id repetidos en el manifest de salas: {dupes}")


def write_rooms_csv(path: Path, rooms: List[RoomPreset]) -> Path:
    check_unique(rooms)
    path = Path(path)
    pd.DataFrame([asdict(r) for r in rooms]).to_csv(path, index=False)
    return path


def read_rooms_csv(path: Path) -> List[RoomPreset]:
    path = Path(path)
    if not path.exists():
        raise DatasetError(f"Fichero de salas no encontrado: {path}")
    df = pd.read_csv(path, dtype={"room_id": str, "split": str, "rng_seed": str})
    rooms = [
        RoomPreset(
            room_id=row["room_id"],
            t60=float(row["t60"]),
            snr_db=float(row["snr_db"]),
            diffuse_gain=float(row["diffuse_gain"]),
            rng_seed=int(row["rng_seed"]),
            split=row["split"],
        )
        for row in df.to_dict("records")
    ]
    check_unique(rooms)
    return rooms
