# features/services/audio_io.py
"""Clips FOA en memoria y su lectura/escritura como WAV de 4 canales."""

from __future__ import annotations

import logging
from dataclasses import dataclass
from pathlib import Path
from typing import List

import numpy as np
import soundfile as sf

from core.datasets import segment_name
from core.exceptions import AudioFormatError, ClipTooShortError

logger = logging.getLogger(__name__)

SAMPLE_RATE = 24000
N_CHANNELS = 4


@dataclass
class FoaClip:
    """Señal ambisónica de primer orden, canales en orden ACN (W, Y, Z, X)."""

    samples: np.ndarray
    sample_rate: int = SAMPLE_RATE
    room_id: str = ""
    clip_id: str = ""

    def __post_init__(self):
        self.samples = np.asarray(self.samples)
        if self.samples.ndim != 2 or self.samples.shape[0] != N_CHANNELS:
            raise AudioFormatError(
                f"{self.clip_id or 'clip'}: se esperan {N_CHANNELS} canales, forma {self.samples.shape}"
            )

    @property
    def n_samples(self) -> int:
        return int(self.samples.shape[1])

    @property
    def duration(self) -> float:
        return self.n_samples / float(self.sample_rate)


def read_foa_wav(path: Path, room_id: str = "", clip_id: str = "") -> FoaClip:
    """Lee un WAV FOA (PCM 16 o float32) a 24 kHz."""
    path = Path(path)
    try:
        data, sr = sf.read(str(path), dtype="float32", always_2d=True)
    except (sf.LibsndfileError, RuntimeError, ValueError) as exc:
        raise AudioFormatError(f"corrupt WAV {path}: {exc}") from exc
    if data.shape[1] != N_CHANNELS:
        raise AudioFormatError(f"{path}: {data.shape[1]} canales, se esperan {N_CHANNELS}")
    if sr != SAMPLE_RATE:
        raise AudioFormatError(f"{path}: frecuencia de muestreo {sr} Hz, se espera {SAMPLE_RATE}")
    return FoaClip(samples=np.ascontiguousarray(data.T), sample_rate=sr, room_id=room_id, clip_id=clip_id or path.stem)


def write_foa_wav(path: Path, clip: FoaClip, subtype: str = "PCM_16") -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    sf.write(str(path), clip.samples.T, clip.sample_rate, subtype=subtype)
    return path


def segment_clip(clip: FoaClip, seconds: float = 5.0) -> List[FoaClip]:
    """Trozos consecutivos sin solape de ``seconds``; el resto final se descarta."""
    length = int(round(seconds * clip.sample_rate))
    count = clip.n_samples // length
    if count == 0:
        raise ClipTooShortError(
            f"clip too short: {clip.clip_id} dura {clip.duration:.2f} s (< {seconds} s)"
        )
    return [
        FoaClip(
            samples=clip.samples[:, i * length:(i + 1) * length],
            sample_rate=clip.sample_rate,
            room_id=clip.room_id,
            clip_id=segment_name(clip.clip_id, i),
        )
        for i in range(count)
    ]
