# synth/services/dataset.py
"""Construcción de un dataset sintético completo, sala por sala.

Cada clip tiene su propio generador aleatorio (semilla derivada de la semilla
del dataset, la sala con su ``rng_seed`` y el índice del clip): el resultado no depende del orden
ni del número de procesos. El manifest se escribe al final, vía fichero
temporal renombrado, para que un fallo nunca deje un manifest parcial.
"""

from __future__ import annotations

import hashlib
import logging
import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Mapping, Optional, Sequence, Tuple

import numpy as np
import pandas as pd
from billiard import Pool

from core.annotations import write_annotation_csv
from core.datasets import DatasetLayout, MANIFEST_COLUMNS
from core.exceptions import ConfigError, DatasetError
from core.seeding import derive_seed
from features.services.audio_io import SAMPLE_RATE, write_foa_wav

from .events import random_events
from .rooms import RoomPreset, check_unique, default_room_manifest, write_rooms_csv
from .scenes import render_scene

logger = logging.getLogger(__name__)


@dataclass
class SynthResult:
    salas: int = 0
    clips: int = 0
    eventos: int = 0
    dataset_dir: Optional[Path] = None
    dataset_hash: str = ""
    por_sala: Dict[str, int] = field(default_factory=dict)

    @property
    def resumen(self) -> str:
        return (
            f"{self.clips} clips en {self.salas} salas ({self.eventos} eventos) -> "
            f"{self.dataset_dir} [sha256 {self.dataset_hash[:12]}]"
        )


def clip_id_for(room_id: str, index: int) -> str:
    return f"{room_id}_clip{index:02d}"


def _render_job(job: Dict) -> Tuple[str, int]:
    """Un clip: sorteo de eventos, render y escritura de WAV + CSV."""
    room: RoomPreset = job["room"]
    rng = np.random.default_rng(job["seed"])
    n_events = int(rng.integers(job["min_events"], job["max_events"] + 1))
    events = random_events(job["clip_seconds"], n_events, rng, job["max_polyphony"])
    clip, annotation = render_scene(
        room,
        events,
        rng,
        clip_seconds=job["clip_seconds"],
        sample_rate=job["sample_rate"],
        max_polyphony=job["max_polyphony"],
        clip_id=job["clip_id"],
    )
    layout = DatasetLayout(Path(job["root"]))
    write_foa_wav(layout.wav(job["clip_id"]), clip, subtype=job["subtype"])
    write_annotation_csv(layout.annotation(job["clip_id"]), annotation)
    return job["clip_id"], len(events)


def dataset_hash(dataset_dir: Path) -> str:
    """sha256 sobre manifest, salas, anotaciones y WAVs en orden de nombre."""
    layout = DatasetLayout(Path(dataset_dir))
    h = hashlib.sha256()
    files = [layout.manifest, layout.rooms]
    files += sorted(layout.metadata_dir.glob("*.csv"))
    files += sorted(layout.audio_dir.glob("*.wav"))
    for path in files:
        if not path.exists():
            raise DatasetError(f"Falta {path} para calcular el hash del dataset")
        h.update(path.relative_to(layout.root).as_posix().encode("utf-8"))
        h.update(path.read_bytes())
    return h.hexdigest()


def build_dataset(
    out_dir: Path,
    rooms: Sequence[RoomPreset],
    clips_per_room: int,
    events_per_clip: Tuple[int, int],
    seed: int,
    clip_seconds: float = 60.0,
    segment_seconds: float = 5.0,
    min_segments_per_room: int = 0,
    sample_rate: int = SAMPLE_RATE,
    max_polyphony: int = 3,
    subtype: str = "PCM_16",
    workers: int = 1,
) -> SynthResult:
    rooms = list(rooms)
    check_unique(rooms)
    lo, hi = events_per_clip
    if lo < 0 or hi < lo:
        raise ConfigError(f"rango de eventos por clip inválido: {events_per_clip}")
    segments = clips_per_room * int(clip_seconds // segment_seconds)
    if segments < min_segments_per_room:
        raise ConfigError(
            f"{clips_per_room} clips por sala dan {segments} segmentos; se necesitan {min_segments_per_room}"
        )

    layout = DatasetLayout(Path(out_dir))
    try:
        layout.audio_dir.mkdir(parents=True, exist_ok=True)
        layout.metadata_dir.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise DatasetError(f"No se puede crear el dataset en {out_dir}: {exc}") from exc

    jobs, manifest_rows = [], []
    for room in rooms:
        for idx in range(clips_per_room):
            clip_id = clip_id_for(room.room_id, idx)
            jobs.append(
                {
                    "room": room,
                    "seed": derive_seed(seed, room.room_id, room.rng_seed, idx),
                    "clip_id": clip_id,
                    "root": str(layout.root),
                    "clip_seconds": clip_seconds,
                    "sample_rate": sample_rate,
                    "min_events": lo,
                    "max_events": hi,
                    "max_polyphony": max_polyphony,
                    "subtype": subtype,
                }
            )
            manifest_rows.append({"clip_id": clip_id, "room_id": room.room_id, "split": room.split})

    logger.info("Sintetizando %d clips en %d salas (%d procesos)", len(jobs), len(rooms), workers)
    try:
        if workers > 1:
            with Pool(processes=workers) as pool:
                done = pool.map(_render_job, jobs)
        else:
            done = [_render_job(job) for job in jobs]
        write_rooms_csv(layout.rooms, rooms)
        tmp = layout.manifest.with_suffix(".csv.tmp")
        pd.DataFrame(manifest_rows, columns=MANIFEST_COLUMNS).to_csv(tmp, index=False)
        os.replace(tmp, layout.manifest)
    except OSError as exc:
        raise DatasetError(f"Fallo de E/S escribiendo el dataset {out_dir}: {exc}") from exc

    digest = dataset_hash(layout.root)
    layout.hash_file.write_text(digest + "\n", encoding="ascii")

    res = SynthResult(salas=len(rooms), clips=len(done), dataset_dir=layout.root, dataset_hash=digest)
    res.eventos = sum(n for _, n in done)
    for room in rooms:
        res.por_sala[room.room_id] = clips_per_room
    logger.info(res.resumen)
    return res


def build_dataset_from_sections(
    out_dir: Path, sections: Mapping[str, Mapping[str, Any]], workers: int = 1
) -> SynthResult:
    """Dataset por defecto (salas de ``default_room_manifest``) con la configuración ya mezclada."""
    data = sections["data"]
    seed = int(sections["run"]["seed"])
    rooms = default_room_manifest(seed, int(data["train_rooms"]), int(data["test_rooms"]))
    return build_dataset(
        Path(out_dir),
        rooms,
        clips_per_room=int(data["clips_per_room"]),
        events_per_clip=(int(data["min_events_per_clip"]), int(data["max_events_per_clip"])),
        seed=seed,
        clip_seconds=float(data["clip_seconds"]),
        segment_seconds=float(data["segment_seconds"]),
        min_segments_per_room=int(sections["meta"]["samples_per_room"]),
        sample_rate=int(data["sample_rate"]),
        max_polyphony=int(data["max_polyphony"]),
        subtype=str(data["wav_subtype"]),
        workers=workers,
    )
