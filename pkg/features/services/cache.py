# features/services/cache.py
"""Caché binaria de características "MSLD".

Cabecera: magic ``MSLD``, versión u32, dims 3 x u32 (C, T, F); después el
tensor float32 little-endian en orden fila.
"""

from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

from core.exceptions import FeatureCacheError

MSLD_MAGIC = b"MSLD"
MSLD_VERSION = 1
_HEADER = struct.Struct("<4sI3I")


def save_feature_file(path: Path, values: np.ndarray) -> Path:
    values = np.asarray(values)
    if values.ndim != 3:
        raise FeatureCacheError(f"{path}: se esperan 3 dimensiones, forma {values.shape}")
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_suffix(path.suffix + ".tmp")
    with tmp.open("wb") as fh:
        fh.write(_HEADER.pack(MSLD_MAGIC, MSLD_VERSION, *values.shape))
        fh.write(np.ascontiguousarray(values, dtype="<f4").tobytes())
    tmp.replace(path)
    return path


def load_feature_file(path: Path) -> np.ndarray:
    path = Path(path)
    try:
        blob = path.read_bytes()
    except OSError as exc:
        raise FeatureCacheError(f"No se puede leer {path}: {exc}") from exc
    if len(blob) < _HEADER.size:
        raise FeatureCacheError(f"{path}: cabecera truncada")
    magic, version, c, t, f = _HEADER.unpack_from(blob)
    if magic != MSLD_MAGIC:
        raise FeatureCacheError(f"{path}: magic inválido {magic!r}")
    if version != MSLD_VERSION:
        raise FeatureCacheError(f"{path}: versión {version} no soportada")
    expected = _HEADER.size + 4 * c * t * f
    if len(blob) != expected:
        raise FeatureCacheError(f"{path}: tamaño {len(blob)} != {expected}")
    return np.frombuffer(blob, dtype="<f4", offset=_HEADER.size).reshape(c, t, f).astype(np.float32)
