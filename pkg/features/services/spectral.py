# features/services/spectral.py
"""Front end espectral: STFT, log-mel y vectores de intensidad FOA.

Entrada de la red: 4 log-mel (W, Y, Z, X) + 3 canales de intensidad (x, y, z)
agregados con el mismo banco mel, [7 x T x 64] en float32.

Escalado de la STFT: ``X_k = Σ_n w[n]·x[n]·e^{-2πikn/N}`` sin normalizar, por
lo que la energía de la trama enventanada es
``(|X_0|² + 2·Σ_{k=1}^{N/2-1} |X_k|² + |X_{N/2}|²) / N`` (ver ``frame_energy``).
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from functools import lru_cache
from typing import Any, Mapping, Union

import librosa
import numpy as np
from scipy import fft as sp_fft
from scipy.signal import get_window

from core.exceptions import ClipTooShortError, ShapeError

from .audio_io import FoaClip, SAMPLE_RATE

logger = logging.getLogger(__name__)

LOG_EPS = 1e-10
IV_EPS = 1e-20


@dataclass(frozen=True)
class FeatureParams:
    sample_rate: int = SAMPLE_RATE
    window_len: int = 1024
    hop: int = 320
    n_mels: int = 64
    fmin: float = 50.0
    fmax: float = 12000.0

    @classmethod
    def from_sections(cls, sections: Mapping[str, Mapping[str, Any]]) -> "FeatureParams":
        feat = sections["features"]
        return cls(
            sample_rate=int(sections["data"]["sample_rate"]),
            window_len=int(feat["window_len"]),
            hop=int(feat["hop"]),
            n_mels=int(feat["n_mels"]),
            fmin=float(feat["fmin"]),
            fmax=float(feat["fmax"]),
        )

    def n_frames(self, n_samples: int) -> int:
        if n_samples < self.window_len:
            return 0
        return (n_samples - self.window_len) // self.hop + 1

    @property
    def n_bins(self) -> int:
        return self.window_len // 2 + 1


DEFAULT_PARAMS = FeatureParams()


def _samples(clip: Union[FoaClip, np.ndarray]) -> np.ndarray:
    return clip.samples if isinstance(clip, FoaClip) else np.asarray(clip)


@lru_cache(maxsize=8)
def _hann(window_len: int) -> np.ndarray:
    win = get_window("hann", window_len, fftbins=True)
    win.setflags(write=False)
    return win


def stft(clip: Union[FoaClip, np.ndarray], window_len: int = 1024, hop: int = 320) -> np.ndarray:
    """STFT de una cara, ventana Hann periódica, sin relleno: [4, T, N/2+1]."""
    x = np.asarray(_samples(clip), dtype=np.float64)
    if x.ndim != 2:
        raise ShapeError("stft", x.shape, detail="se espera [canales, muestras]")
    if x.shape[1] < window_len:
        raise ClipTooShortError(f"clip too short: {x.shape[1]} muestras < ventana de {window_len}")
    frames = np.lib.stride_tricks.sliding_window_view(x, window_len, axis=1)[:, ::hop, :]
    return sp_fft.rfft(frames * _hann(window_len), axis=-1)


def frame_energy(spectrum_frame: np.ndarray) -> float:
    """Energía de una trama a partir de su espectro de una cara (Parseval)."""
    power = np.abs(np.asarray(spectrum_frame)) ** 2
    n_fft = 2 * (power.shape[-1] - 1)
    return float((power[0] + 2.0 * power[1:-1].sum() + power[-1]) / n_fft)


@lru_cache(maxsize=16)
def mel_filterbank(
    sample_rate: int = SAMPLE_RATE,
    n_fft: int = 1024,
    n_mels: int = 64,
    fmin: float = 50.0,
    fmax: float = 12000.0,
) -> np.ndarray:
    """Banco mel HTK triangular [n_mels x n_fft/2+1], cada fila con suma 1."""
    fb = librosa.filters.mel(
        sr=sample_rate, n_fft=n_fft, n_mels=n_mels, fmin=fmin, fmax=fmax, htk=True, norm=None
    ).astype(np.float64)
    widths = fb.sum(axis=1, keepdims=True)
    if np.any(widths <= 0):
        raise ShapeError("mel_filterbank", fb.shape, detail="banda mel sin bins de frecuencia")
    fb = fb / widths
    fb.setflags(write=False)
    return fb


def _filterbank_for(spec: np.ndarray, params: FeatureParams) -> np.ndarray:
    fb = mel_filterbank(params.sample_rate, params.window_len, params.n_mels, params.fmin, params.fmax)
    if spec.shape[-1] != fb.shape[1]:
        raise ShapeError("mel", spec.shape, fb.shape)
    return fb


def logmel(spec: np.ndarray, params: FeatureParams = DEFAULT_PARAMS) -> np.ndarray:
    """10·log10(energía mel + 1e-10) por canal: [4, T, n_mels]."""
    fb = _filterbank_for(spec, params)
    energy = (np.abs(spec) ** 2) @ fb.T
    return 10.0 * np.log10(energy + LOG_EPS)


def intensity_vectors(spec: np.ndarray, params: FeatureParams = DEFAULT_PARAMS) -> np.ndarray:
    """Intensidad activa I = Re(conj(W)·(X, Y, Z)) agregada en mel y normalizada.

    Devuelve [3, T, n_mels] en orden (x, y, z); cada vector (por trama y
    banda) se divide por su norma + ε, así que cada componente queda en [-1, 1].
    """
    if spec.shape[0] != 4:
        raise ShapeError("intensity_vectors", spec.shape, detail="se esperan 4 canales ACN")
    fb = _filterbank_for(spec, params)
    w_conj = np.conj(spec[0])
    # ACN: 1 = Y, 2 = Z, 3 = X
    raw = np.stack([np.real(w_conj * spec[3]), np.real(w_conj * spec[1]), np.real(w_conj * spec[2])])
    mel_iv = raw @ fb.T
    norm = np.sqrt(np.sum(mel_iv ** 2, axis=0, keepdims=True))
    return mel_iv / (norm + IV_EPS)


def extract_features(clip: Union[FoaClip, np.ndarray], params: FeatureParams = DEFAULT_PARAMS) -> np.ndarray:
    """[7, T, n_mels] float32: log-mel de W, Y, Z, X seguido de intensidad x, y, z."""
    spec = stft(clip, params.window_len, params.hop)
    values = np.concatenate([logmel(spec, params), intensity_vectors(spec, params)], axis=0)
    return values.astype(np.float32)
