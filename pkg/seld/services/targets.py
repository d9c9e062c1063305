# seld/services/targets.py
"""Objetivos ACCDOA, decodificación y correspondencia entre rejillas.

Un segmento de 5 s tiene 50 frames de etiqueta (100 ms) y 46 frames de
modelo. El centro del frame de modelo ``m`` es la media de los centros de sus
``p`` tramas STFT (``p`` = pooling temporal total):

    c(m) = ((p·m + (p-1)/2)·hop + window/2) / sample_rate

Cada frame de modelo toma el frame de etiqueta que contiene su centro; al
decodificar, cada frame de etiqueta toma el frame de modelo de centro más
cercano.
"""

from __future__ import annotations

import logging
from pathlib import Path
from typing import Optional

import numpy as np

from autodiff.functional import mse_loss
from autodiff.tensor import Tensor
from core.annotations import LABEL_HOP_S, Annotation, AnnotationRow, write_annotation_csv
from core.exceptions import ShapeError
from features.services.spectral import DEFAULT_PARAMS, FeatureParams

from .model import CrnnConfig

logger = logging.getLogger(__name__)

ACT_THRESHOLD = 0.5
TIME_POOL = CrnnConfig().time_pool
N_CLASSES = CrnnConfig().n_classes


def label_frames_per_segment(segment_seconds: float = 5.0) -> int:
    return int(round(segment_seconds / LABEL_HOP_S))


def model_frame_centers(
    n_model_frames: int, time_pool: int = TIME_POOL, params: FeatureParams = DEFAULT_PARAMS
) -> np.ndarray:
    """Centro en segundos de cada frame de modelo, relativo al inicio del segmento."""
    m = np.arange(n_model_frames)
    stft_center = (time_pool * m + (time_pool - 1) / 2.0) * params.hop + params.window_len / 2.0
    return stft_center / params.sample_rate


def label_frame_for_model_frame(n_model_frames: int, time_pool: int = TIME_POOL, **kw) -> np.ndarray:
    centers = model_frame_centers(n_model_frames, time_pool, **kw)
    return np.floor(centers / LABEL_HOP_S + 1e-9).astype(int)


def model_frame_for_label_frame(
    n_label_frames: int, n_model_frames: int, time_pool: int = TIME_POOL, **kw
) -> np.ndarray:
    centers = model_frame_centers(n_model_frames, time_pool, **kw)
    label_centers = (np.arange(n_label_frames) + 0.5) * LABEL_HOP_S
    return np.argmin(np.abs(label_centers[:, None] - centers[None, :]), axis=1)


def doa_unit_vector(azimuth_deg: float, elevation_deg: float) -> np.ndarray:
    az, el = np.deg2rad(azimuth_deg), np.deg2rad(elevation_deg)
    return np.array([np.cos(el) * np.cos(az), np.cos(el) * np.sin(az), np.sin(el)])


def vector_to_angles(v: np.ndarray):
    x, y, z = v
    return float(np.degrees(np.arctan2(y, x))), float(np.degrees(np.arctan2(z, np.hypot(x, y))))


def segment_annotation(ann: Annotation, segment_index: int, segment_seconds: float = 5.0) -> Annotation:
    """Filas del segmento con frames relativos a su inicio."""
    n = label_frames_per_segment(segment_seconds)
    return ann.window(segment_index * n, n)


def make_targets(
    ann: Annotation,
    n_model_frames: int = 46,
    n_classes: int = N_CLASSES,
    time_pool: int = TIME_POOL,
    dtype=np.float32,
) -> np.ndarray:
    """Objetivo ACCDOA [T', clases, 3]: vector DOA unitario si activo, cero si no.

    ``ann`` lleva frames relativos al segmento. Si una clase aparece en dos
    pistas del mismo frame se queda la de pista más baja.
    """
    target = np.zeros((n_model_frames, n_classes, 3), dtype=np.float64)
    if ann.empty:
        return target.astype(dtype)
    by_frame = ann.by_frame()
    for m, label in enumerate(label_frame_for_model_frame(n_model_frames, time_pool)):
        chosen = {}
        for row in by_frame.get(int(label), ()):
            if row.class_id not in chosen or row.track < chosen[row.class_id].track:
                chosen[row.class_id] = row
        for cls, row in chosen.items():
            target[m, cls] = doa_unit_vector(row.azimuth, row.elevation)
    return target.astype(dtype)


def decode(
    pred: np.ndarray,
    act_threshold: float = ACT_THRESHOLD,
    n_label_frames: Optional[int] = 50,
    time_pool: int = TIME_POOL,
) -> Annotation:
    """Salida ACCDOA [T', clases, 3] -> anotación en la rejilla de 100 ms (pista 0)."""
    pred = np.asarray(pred.data if isinstance(pred, Tensor) else pred, dtype=np.float64)
    if pred.ndim != 3 or pred.shape[2] != 3:
        raise ShapeError("decode", pred.shape, (None, None, 3))
    if not 0.0 < act_threshold < 1.0:
        raise ValueError(f"umbral de actividad fuera de (0, 1): {act_threshold}")
    norms = np.linalg.norm(pred, axis=2)
    rows = []
    for label, m in enumerate(model_frame_for_label_frame(n_label_frames, pred.shape[0], time_pool)):
        for cls in np.flatnonzero(norms[m] > act_threshold):
            az, el = vector_to_angles(pred[m, cls] / norms[m, cls])
            rows.append(AnnotationRow(label, int(cls), 0, az, el))
    return Annotation(rows)


def seld_loss(pred: Tensor, target) -> Tensor:
    """MSE medio sobre todos los elementos [.., T', clases, 3]."""
    return mse_loss(pred, target)


def write_prediction_csv(path: Path, ann: Annotation) -> Path:
    """Mismo formato que las anotaciones; la pista siempre es 0."""
    return write_annotation_csv(path, Annotation([r._replace(track=0) for r in ann]))
