# synth/services/scenes.py
"""Render de escenas FOA: camino directo + cola difusa exponencial + ruido.

La cola difusa sustituye a una respuesta al impulso medida: ruido independiente
por canal con envolvente de amplitud ``exp(-6.9078·t/t60)`` (-60 dB en t60),
energía de W normalizada a ``diffuse_gain²`` y dipolos con un tercio de la
energía de W (campo isótropo). El ruido de fondo también es isótropo, con RMS
en W igual a ``0.1·10^(-snr_db/20)``.
"""

from __future__ import annotations

import logging
from typing import List, Tuple

import numpy as np
from scipy.signal import fftconvolve

from core.annotations import LABEL_HOP_S, Annotation, AnnotationRow
from core.exceptions import PolyphonyError
from features.services.audio_io import FoaClip, SAMPLE_RATE

from .events import EventSpec, active_frames, polyphony_counts, synth_event
from .rooms import RoomPreset

logger = logging.getLogger(__name__)

DECAY_60DB = 3.0 * np.log(10.0)  # 6.9078
NOISE_REFERENCE_RMS = 0.1
PEAK_LIMIT = 0.99
TAIL_T60_FACTOR = 1.5


def foa_gains(azimuth_deg: float, elevation_deg: float) -> np.ndarray:
    """Ganancias ACN/SN3D (W, Y, Z, X) de una onda plana."""
    az, el = np.deg2rad(azimuth_deg), np.deg2rad(elevation_deg)
    return np.array([1.0, np.cos(el) * np.sin(az), np.sin(el), np.cos(el) * np.cos(az)])


def foa_encode(mono: np.ndarray, azimuth_deg: float, elevation_deg: float) -> np.ndarray:
    """Panoramiza una señal mono a FOA: [4 x n]."""
    if abs(elevation_deg) > 90.0:
        raise ValueError(f"elevación fuera de [-90, 90]: {elevation_deg}")
    return foa_gains(azimuth_deg, elevation_deg)[:, None] * np.asarray(mono, dtype=np.float64)[None, :]


def diffuse_tail(room: RoomPreset, rng: np.random.Generator, sample_rate: int = SAMPLE_RATE) -> np.ndarray:
    """Cola reverberante isótropa [4 x L]; vacía si t60 o la ganancia son 0."""
    length = int(TAIL_T60_FACTOR * room.t60 * sample_rate)
    if length <= 1 or room.diffuse_gain <= 0:
        return np.zeros((4, 0))
    t = np.arange(length) / sample_rate
    envelope = np.exp(-DECAY_60DB * t / room.t60)
    tail = rng.standard_normal((4, length)) * envelope
    tail *= 1.0 / np.sqrt(np.sum(tail ** 2, axis=1, keepdims=True))
    tail[0] *= room.diffuse_gain
    tail[1:] *= room.diffuse_gain / np.sqrt(3.0)
    return tail


def room_impulse_response(
    room: RoomPreset, azimuth_deg: float, elevation_deg: float, rng: np.random.Generator,
    sample_rate: int = SAMPLE_RATE,
) -> np.ndarray:
    """Respuesta sintética completa de la sala: impulso directo + cola difusa."""
    tail = diffuse_tail(room, rng, sample_rate)
    ir = np.zeros((4, max(tail.shape[1], 1)))
    ir[:, 0] = foa_gains(azimuth_deg, elevation_deg)
    ir[:, : tail.shape[1]] += tail
    return ir


def isotropic_noise(n_samples: int, rms: float, rng: np.random.Generator) -> np.ndarray:
    noise = rng.standard_normal((4, n_samples))
    noise[0] *= rms
    noise[1:] *= rms / np.sqrt(3.0)
    return noise


def assign_tracks(events: List[EventSpec]) -> List[int]:
    """Pista más baja libre en las tramas activas de cada evento (por inicio)."""
    order = sorted(range(len(events)), key=lambda i: (events[i].onset, events[i].class_id, i))
    busy: List[set] = []
    tracks = [0] * len(events)
    for i in order:
        frames = set(active_frames(events[i].onset, events[i].duration))
        track = 0
        while track < len(busy) and busy[track] & frames:
            track += 1
        if track == len(busy):
            busy.append(set())
        busy[track] |= frames
        tracks[i] = track
    return tracks


def scene_annotation(events: List[EventSpec], n_frames: int, max_polyphony: int = 3) -> Annotation:
    counts = polyphony_counts(events, n_frames)
    bad = np.flatnonzero(counts > max_polyphony)
    if bad.size:
        raise PolyphonyError(bad.tolist())
    rows = []
    for ev, track in zip(events, assign_tracks(events)):
        for f in active_frames(ev.onset, ev.duration):
            if f < n_frames:
                rows.append(AnnotationRow(f, ev.class_id, track, ev.azimuth, ev.elevation))
    return Annotation(rows)


def render_scene(
    room: RoomPreset,
    events: List[EventSpec],
    rng: np.random.Generator,
    clip_seconds: float = 60.0,
    sample_rate: int = SAMPLE_RATE,
    max_polyphony: int = 3,
    clip_id: str = "",
) -> Tuple[FoaClip, Annotation]:
    """Mezcla los eventos en la sala y devuelve el clip con su anotación.

    Se valida la polifonía antes de sintetizar nada.
    """
    n_samples = int(round(clip_seconds * sample_rate))
    n_frames = int(round(clip_seconds / LABEL_HOP_S))
    for ev in events:
        if ev.onset < 0 or ev.offset > clip_seconds + 1e-9:
            raise ValueError(f"evento fuera del clip: {ev}")
    annotation = scene_annotation(events, n_frames, max_polyphony)

    mix = np.zeros((4, n_samples))
    for ev in events:
        mono = synth_event(ev.class_id, ev.duration, rng, sample_rate) * 10.0 ** (ev.level_db / 20.0)
        start = int(round(ev.onset * sample_rate))
        direct = foa_encode(mono, ev.azimuth, ev.elevation)
        stop = min(start + direct.shape[1], n_samples)
        mix[:, start:stop] += direct[:, : stop - start]
        tail = diffuse_tail(room, rng, sample_rate)
        if tail.shape[1]:
            wet = fftconvolve(np.broadcast_to(mono, (4, mono.size)), tail, axes=1)
            stop = min(start + wet.shape[1], n_samples)
            mix[:, start:stop] += wet[:, : stop - start]

    mix += isotropic_noise(n_samples, NOISE_REFERENCE_RMS * 10.0 ** (-room.snr_db / 20.0), rng)
    peak = np.max(np.abs(mix))
    if peak > PEAK_LIMIT:
        mix *= PEAK_LIMIT / peak
    clip = FoaClip(mix.astype(np.float32), sample_rate=sample_rate, room_id=room.room_id, clip_id=clip_id)
    return clip, annotation


def energy_decay_slope(signal: np.ndarray, sample_rate: int = SAMPLE_RATE, start_s: float = 0.0) -> float:
    """Pendiente (dB/s) de la curva de decaimiento de Schroeder del canal W.

    Se ajusta una recta entre -5 y -25 dB respecto de la energía en ``start_s``.
    """
    x = np.asarray(signal, dtype=np.float64)
    if x.ndim == 2:
        x = x[0]
    x = x[int(round(start_s * sample_rate)):]
    edc = np.cumsum((x ** 2)[::-1])[::-1]
    if edc.size == 0 or edc[0] <= 0:
        raise ValueError("señal sin energía tras start_s")
    edc_db = 10.0 * np.log10(edc / edc[0] + 1e-300)
    region = np.flatnonzero((edc_db <= -5.0) & (edc_db >= -25.0))
    if region.size < 2:
        raise ValueError("curva de decaimiento demasiado corta para ajustar")
    slope, _ = np.polyfit(region / sample_rate, edc_db[region], 1)
    return float(slope)
