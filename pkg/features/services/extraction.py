# features/services/extraction.py
"""Extracción de características de todo un dataset hacia la caché MSLD.

Un fichero por segmento de 5 s y un ``index.csv`` con el hash de cada WAV y
la huella de los parámetros de extracción: un clip cuyo hash y huella
coinciden con el índice y cuyos ficheros existen se omite,
de modo que repetir la extracción no reescribe nada.
"""

from __future__ import annotations

import hashlib
import json
import logging
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Dict, List, Optional

import pandas as pd
from billiard import Pool

from core.datasets import DatasetLayout, read_manifest, segment_name, sha256_file
from core.exceptions import DataError

from .audio_io import read_foa_wav, segment_clip
from .cache import save_feature_file
from .spectral import FeatureParams, extract_features

logger = logging.getLogger(__name__)

INDEX_COLUMNS = ["clip_id", "room_id", "split", "wav_sha256", "params_digest", "n_segments"]


@dataclass
class ExtractionResult:
    procesados: int = 0
    omitidos: int = 0
    segmentos: int = 0
    cache_dir: Optional[Path] = None
    clips: List[str] = field(default_factory=list)

    @property
    def resumen(self) -> str:
        return (
            f"{self.procesados} clips procesados, {self.omitidos} al día, "
            f"{self.segmentos} segmentos escritos en {self.cache_dir}"
        )


def read_index(cache_dir: Path) -> pd.DataFrame:
    path = Path(cache_dir) / "index.csv"
    if not path.exists():
        return pd.DataFrame(columns=INDEX_COLUMNS)
    text_columns = ("clip_id", "room_id", "split", "wav_sha256", "params_digest")
    return pd.read_csv(path, dtype={name: str for name in text_columns})


def params_digest(params: FeatureParams, segment_seconds: float) -> str:
    """Huella de los parámetros que determinan el contenido de la caché."""
    payload = json.dumps({**asdict(params), "segment_seconds": float(segment_seconds)}, sort_keys=True)
    return hashlib.sha256(payload.encode("utf-8")).hexdigest()


def _is_current(row: Optional[Dict], wav_hash: str, digest: str, cache_dir: Path) -> bool:
    if row is None or row.get("wav_sha256") != wav_hash or row.get("params_digest") != digest:
        return False
    n = int(row.get("n_segments", 0))
    return n > 0 and all((cache_dir / f"{segment_name(row['clip_id'], i)}.msld").exists() for i in range(n))


def _extract_clip(job: Dict) -> Dict:
    """Trabajo por clip (proceso del pool): lee, segmenta y guarda."""
    params: FeatureParams = job["params"]
    clip = read_foa_wav(job["wav"], room_id=job["room_id"], clip_id=job["clip_id"])
    segments = segment_clip(clip, job["segment_seconds"])
    cache_dir = Path(job["cache_dir"])
    for seg in segments:
        save_feature_file(cache_dir / f"{seg.clip_id}.msld", extract_features(seg, params))
    return {"clip_id": job["clip_id"], "n_segments": len(segments)}


def extract_dataset_features(
    dataset_dir: Path,
    cache_dir: Optional[Path] = None,
    params: FeatureParams = FeatureParams(),
    segment_seconds: float = 5.0,
    workers: int = 1,
) -> ExtractionResult:
    layout = DatasetLayout(Path(dataset_dir))
    cache_dir = Path(cache_dir) if cache_dir else layout.default_cache()
    cache_dir.mkdir(parents=True, exist_ok=True)
    manifest = read_manifest(layout.manifest)
    digest = params_digest(params, segment_seconds)
    previous = {row["clip_id"]: row for row in read_index(cache_dir).to_dict("records")}

    res = ExtractionResult(cache_dir=cache_dir)
    rows, jobs = [], []
    for rec in manifest.to_dict("records"):
        wav = layout.wav(rec["clip_id"])
        if not wav.exists():
            raise DataError(f"WAV no encontrado para {rec['clip_id']}: {wav}")
        wav_hash = sha256_file(wav)
        old = previous.get(rec["clip_id"])
        row = {**rec, "wav_sha256": wav_hash, "params_digest": digest, "n_segments": 0}
        if _is_current(old, wav_hash, digest, cache_dir):
            row["n_segments"] = int(old["n_segments"])
            res.omitidos += 1
        else:
            jobs.append(
                {
                    "wav": str(wav),
                    "clip_id": rec["clip_id"],
                    "room_id": rec["room_id"],
                    "cache_dir": str(cache_dir),
                    "params": params,
                    "segment_seconds": segment_seconds,
                }
            )
        rows.append(row)

    if jobs:
        logger.info("Extrayendo %d clips con %d procesos", len(jobs), workers)
        if workers > 1:
            with Pool(processes=workers) as pool:
                done = pool.map(_extract_clip, jobs)
        else:
            done = [_extract_clip(job) for job in jobs]
        counts = {d["clip_id"]: d["n_segments"] for d in done}
        for row in rows:
            if row["clip_id"] in counts:
                row["n_segments"] = counts[row["clip_id"]]
                res.procesados += 1
                res.segmentos += counts[row["clip_id"]]
                res.clips.append(row["clip_id"])

    if jobs or not (cache_dir / "index.csv").exists():
        pd.DataFrame(rows, columns=INDEX_COLUMNS).to_csv(cache_dir / "index.csv", index=False)
    logger.info(res.resumen)
    return res
