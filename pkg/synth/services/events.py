# synth/services/events.py
"""Eventos sonoros paramétricos (13 clases) y su colocación en el tiempo."""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Callable, Dict, List

import numpy as np
from scipy import signal

from core.annotations import LABEL_HOP_S

logger = logging.getLogger(__name__)

N_CLASSES = 13
MIN_OVERLAP_S = 0.5 * LABEL_HOP_S
_TOL = 1e-9


@dataclass(frozen=True)
class EventSpec:
    class_id: int
    onset: float
    duration: float
    azimuth: float
    elevation: float
    level_db: float = 0.0

    @property
    def offset(self) -> float:
        return self.onset + self.duration


def active_frames(onset: float, duration: float) -> range:
    """Tramas de 100 ms con solape >= 50 % con el evento."""
    end = onset + duration
    first = int(np.floor(onset / LABEL_HOP_S))
    last = int(np.ceil(end / LABEL_HOP_S))
    frames = [
        f
        for f in range(max(first, 0), last)
        if min(end, (f + 1) * LABEL_HOP_S) - max(onset, f * LABEL_HOP_S) >= MIN_OVERLAP_S - _TOL
    ]
    return range(frames[0], frames[-1] + 1) if frames else range(0)


# --------------------------------------------------------------------------
# Plantillas por clase: cada familia es distinta para que las clases se separen
# --------------------------------------------------------------------------
def _tone_complex(t, sr, rng):
    f0 = rng.uniform(180.0, 320.0)
    return sum(np.sin(2 * np.pi * k * f0 * t + rng.uniform(0, 2 * np.pi)) / k for k in range(1, 6))


def _chirp_up(t, sr, rng):
    return signal.chirp(t, f0=rng.uniform(300, 600), t1=t[-1] if len(t) > 1 else 1.0, f1=rng.uniform(3000, 5000))


def _chirp_down(t, sr, rng):
    t1 = t[-1] if len(t) > 1 else 1.0
    return signal.chirp(t, f0=rng.uniform(4000, 6000), t1=t1, f1=rng.uniform(400, 800), method="logarithmic")


def _band_noise(t, sr, rng, lo, hi):
    sos = signal.butter(4, [lo, hi], btype="bandpass", fs=sr, output="sos")
    return signal.sosfilt(sos, rng.standard_normal(len(t)))


def _am_noise_burst(t, sr, rng):
    rate = rng.uniform(3.0, 6.0)
    return _band_noise(t, sr, rng, 1000, 3000) * (1.0 + np.sin(2 * np.pi * rate * t))


def _click_train(t, sr, rng):
    x = np.zeros(len(t))
    period = int(sr / rng.uniform(8.0, 16.0))
    x[:: max(period, 1)] = 1.0
    sos = signal.butter(2, [500, 6000], btype="bandpass", fs=sr, output="sos")
    return signal.sosfilt(sos, x)


def _square(t, sr, rng):
    sq = signal.square(2 * np.pi * rng.uniform(150, 250) * t)
    sos = signal.butter(4, 4000, btype="lowpass", fs=sr, output="sos")
    return signal.sosfilt(sos, sq)


def _sawtooth(t, sr, rng):
    return signal.sawtooth(2 * np.pi * rng.uniform(400, 700) * t)


def _rumble(t, sr, rng):
    sos = signal.butter(4, 400, btype="lowpass", fs=sr, output="sos")
    return signal.sosfilt(sos, rng.standard_normal(len(t)))


def _hiss(t, sr, rng):
    sos = signal.butter(4, 6000, btype="highpass", fs=sr, output="sos")
    return signal.sosfilt(sos, rng.standard_normal(len(t)))


def _fm_tone(t, sr, rng):
    fc, fm, beta = rng.uniform(900, 1300), rng.uniform(4, 8), rng.uniform(20, 60)
    return np.sin(2 * np.pi * fc * t + (beta / fm) * np.sin(2 * np.pi * fm * t))


def _gated_tone(t, sr, rng):
    gate = signal.square(2 * np.pi * rng.uniform(4, 7) * t) > 0
    return np.sin(2 * np.pi * rng.uniform(700, 900) * t) * gate


def _gauss_pulses(t, sr, rng):
    x = np.zeros(len(t))
    fc = rng.uniform(1800, 2500)
    pulse_t = np.arange(-0.005, 0.005, 1.0 / sr)
    pulse = signal.gausspulse(pulse_t, fc=fc, bw=0.5)
    step = int(sr / rng.uniform(3.0, 6.0))
    for start in range(0, max(len(t) - len(pulse), 0) + 1, max(step, 1)):
        x[start:start + len(pulse)] += pulse[: len(x) - start]
    return x


def _knocks(t, sr, rng):
    x = np.zeros(len(t))
    hits = max(1, int(len(t) / sr * rng.uniform(2.0, 4.0)))
    decay = np.exp(-np.arange(int(0.03 * sr)) / (0.005 * sr))
    for start in np.sort(rng.integers(0, max(len(t) - len(decay), 1), size=hits)):
        burst = rng.standard_normal(len(decay)) * decay
        x[start:start + len(burst)] += burst[: len(x) - start]
    sos = signal.butter(2, [2500, 8000], btype="bandpass", fs=sr, output="sos")
    return signal.sosfilt(sos, x)


TEMPLATES: Dict[int, Callable] = {
    0: _tone_complex,
    1: _chirp_up,
    2: _chirp_down,
    3: _am_noise_burst,
    4: _click_train,
    5: _square,
    6: _sawtooth,
    7: _rumble,
    8: _hiss,
    9: _fm_tone,
    10: _gated_tone,
    11: _gauss_pulses,
    12: _knocks,
}

CLASS_NAMES = [
    "tono_armonico", "chirp_ascendente", "chirp_descendente", "rafaga_am", "clics",
    "cuadrada", "diente_sierra", "retumbo", "siseo", "tono_fm", "pitido", "pulsos", "golpes",
]


def synth_event(class_id: int, duration: float, rng: np.random.Generator, sample_rate: int = 24000) -> np.ndarray:
    """Señal mono de la clase con pico 1 y rampas de 10 ms en los extremos."""
    if class_id not in TEMPLATES:
        raise ValueError(f"clase desconocida: {class_id} (válidas 0..{N_CLASSES - 1})")
    n = int(round(duration * sample_rate))
    if n <= 0:
        return np.zeros(0)
    t = np.arange(n) / sample_rate
    x = np.asarray(TEMPLATES[class_id](t, sample_rate, rng), dtype=np.float64)
    ramp = min(int(0.01 * sample_rate), n // 2)
    if ramp > 0:
        fade = signal.windows.hann(2 * ramp)
        x[:ramp] *= fade[:ramp]
        x[-ramp:] *= fade[ramp:]
    peak = np.max(np.abs(x))
    return x / peak if peak > 0 else x


def polyphony_counts(events: List[EventSpec], n_frames: int) -> np.ndarray:
    counts = np.zeros(n_frames, dtype=int)
    for ev in events:
        for f in active_frames(ev.onset, ev.duration):
            if f < n_frames:
                counts[f] += 1
    return counts


def random_events(
    clip_seconds: float,
    n_events: int,
    rng: np.random.Generator,
    max_polyphony: int = 3,
    max_tries: int = 200,
) -> List[EventSpec]:
    """Eventos al azar que respetan el tope de polifonía (muestreo por rechazo).

    Azimut y elevación son grados enteros, igual que en el CSV de anotación.
    """
    n_frames = int(round(clip_seconds / LABEL_HOP_S))
    events: List[EventSpec] = []
    counts = np.zeros(n_frames, dtype=int)
    for _ in range(n_events):
        for _ in range(max_tries):
            duration = round(float(rng.uniform(0.5, 4.0)), 2)
            onset = float(np.floor(rng.uniform(0.0, clip_seconds - duration) * 100.0) / 100.0)
            frames = [f for f in active_frames(onset, duration) if f < n_frames]
            if frames and np.all(counts[frames] < max_polyphony):
                counts[frames] += 1
                events.append(
                    EventSpec(
                        class_id=int(rng.integers(0, N_CLASSES)),
                        onset=onset,
                        duration=duration,
                        azimuth=float(rng.integers(-179, 181)),
                        elevation=float(rng.integers(-60, 61)),
                        level_db=round(float(rng.uniform(-6.0, 0.0)), 2),
                    )
                )
                break
        else:
            logger.debug("Sin hueco para otro evento tras %d intentos", max_tries)
    return sorted(events, key=lambda e: (e.onset, e.class_id))
