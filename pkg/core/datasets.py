# core/datasets.py
"""Estructura en disco de un dataset sintético y de su caché de características.

    <dataset>/manifest.csv          clip_id,room_id,split
    <dataset>/rooms.csv             presets de sala
    <dataset>/foa/<clip_id>.wav     audio FOA de 4 canales
    <dataset>/metadata/<clip_id>.csv anotaciones (sin cabecera)
    <dataset>/dataset_hash.txt      sha256 del contenido
    <cache>/<clip_id>_seg<NN>.msld  características por segmento
    <cache>/index.csv               clip_id,room_id,split,wav_sha256,params_digest,n_segments
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass
from pathlib import Path

import pandas as pd

from .exceptions import DatasetError

MANIFEST_COLUMNS = ["clip_id", "room_id", "split"]


@dataclass(frozen=True)
class DatasetLayout:
    root: Path

    @property
    def manifest(self) -> Path:
        return self.root / "manifest.csv"

    @property
    def rooms(self) -> Path:
        return self.root / "rooms.csv"

    @property
    def audio_dir(self) -> Path:
        return self.root / "foa"

    @property
    def metadata_dir(self) -> Path:
        return self.root / "metadata"

    @property
    def hash_file(self) -> Path:
        return self.root / "dataset_hash.txt"

    def wav(self, clip_id: str) -> Path:
        return self.audio_dir / f"{clip_id}.wav"

    def annotation(self, clip_id: str) -> Path:
        return self.metadata_dir / f"{clip_id}.csv"

    def default_cache(self) -> Path:
        return self.root / "features"


def segment_name(clip_id: str, index: int) -> str:
    return f"{clip_id}_seg{index:02d}"


def read_manifest(path: Path) -> pd.DataFrame:
    """Lee ``manifest.csv`` ordenado por clip_id (orden de nombre de fichero)."""
    path = Path(path)
    if not path.exists():
        raise DatasetError(f"Manifest no encontrado: {path}")
    df = pd.read_csv(path, dtype=str)
    missing = [c for c in MANIFEST_COLUMNS if c not in df.columns]
    if missing:
        raise DatasetError(f"{path}: faltan columnas {missing}")
    if df["clip_id"].duplicated().any():
        raise DatasetError(f"{path}: clip_id duplicados")
    return df[MANIFEST_COLUMNS].sort_values("clip_id", kind="stable").reset_index(drop=True)


def sha256_file(path: Path, chunk: int = 1 << 20) -> str:
    h = hashlib.sha256()
    with Path(path).open("rb") as fh:
        for block in iter(lambda: fh.read(chunk), b""):
            h.update(block)
    return h.hexdigest()


def read_dataset_hash(root: Path) -> str:
    path = DatasetLayout(Path(root)).hash_file
    if not path.exists():
        raise DatasetError(f"Dataset sin hash: {path}")
    return path.read_text(encoding="ascii").strip()
