# features/tests/test_spectral.py
import numpy as np
import pytest
from hypothesis import given, settings as hsettings, strategies as st

from core.exceptions import ClipTooShortError
from features.services.spectral import (
    FeatureParams,
    extract_features,
    frame_energy,
    intensity_vectors,
    logmel,
    mel_filterbank,
    stft,
)

from .conftest import SR, encode


def test_stft_numero_de_tramas():
    spec = stft(np.zeros((4, 5 * SR)))
    assert spec.shape == (4, 372, 513)
    assert FeatureParams().n_frames(5 * SR) == 372


def test_stft_silencio_es_cero():
    assert np.all(stft(np.zeros((4, 2048))) == 0)


def test_stft_tono_centrado_en_bin():
    t = np.arange(SR) / SR
    x = np.zeros((4, SR))
    x[0] = np.sin(2 * np.pi * (10 * SR / 1024) * t)
    mag = np.abs(stft(x))
    assert np.all(np.argmax(mag[0], axis=-1) == 10)


def test_stft_clip_demasiado_corto():
    with pytest.raises(ClipTooShortError) as exc:
        stft(np.zeros((4, 1000)))
    assert "clip too short" in str(exc.value)


def test_parseval_por_trama(rng):
    x = rng.standard_normal((4, 4096))
    spec = stft(x)
    window = np.hanning(1025)[:-1]  # Hann periódica
    for frame in (0, 3, 9):
        seg = x[1, frame * 320:frame * 320 + 1024] * window
        assert frame_energy(spec[1, frame]) == pytest.approx(np.sum(seg ** 2), rel=1e-6)


def test_banco_mel_filas_de_suma_uno():
    fb = mel_filterbank(SR, 1024, 64, 50.0, 12000.0)
    assert fb.shape == (64, 513)
    np.testing.assert_allclose(fb.sum(axis=1), 1.0)
    assert np.all(fb >= 0)
    # triangular: cada fila tiene un único máximo contiguo
    for row in fb[::8]:
        support = np.flatnonzero(row)
        assert np.all(np.diff(support) == 1)


def test_logmel_silencio():
    spec = np.zeros((4, 3, 513), dtype=complex)
    np.testing.assert_allclose(logmel(spec), -100.0)


def test_logmel_contra_producto_denso(rng):
    spec = rng.standard_normal((4, 2, 513)) + 1j * rng.standard_normal((4, 2, 513))
    fb = mel_filterbank()
    energy = np.zeros((4, 2, 64))
    for c in range(4):
        for t in range(2):
            for m in range(64):
                energy[c, t, m] = sum(fb[m, k] * abs(spec[c, t, k]) ** 2 for k in np.flatnonzero(fb[m]))
    np.testing.assert_allclose(10 ** (logmel(spec) / 10) - 1e-10, energy, rtol=1e-6)


def test_logmel_bin_unico_solo_bandas_que_lo_cubren():
    spec = np.zeros((4, 1, 513), dtype=complex)
    spec[:, :, 100] = 1.0
    out = logmel(spec)[0, 0]
    covering = mel_filterbank()[:, 100] > 0
    assert np.all(out[covering] > -100.0)
    np.testing.assert_allclose(out[~covering], -100.0)


def test_intensidad_recupera_la_direccion(noise_clip):
    iv = intensity_vectors(stft(noise_clip))
    az, el = np.deg2rad(30.0), np.deg2rad(10.0)
    truth = np.array([np.cos(el) * np.cos(az), np.cos(el) * np.sin(az), np.sin(el)])
    mean_dir = iv.mean(axis=(1, 2))
    mean_dir /= np.linalg.norm(mean_dir)
    assert np.degrees(np.arccos(np.clip(mean_dir @ truth, -1, 1))) < 1.0


def test_intensidad_eje_y():
    mono = np.random.default_rng(1).standard_normal(4096)
    iv = intensity_vectors(stft(encode(mono, 90.0, 0.0)))
    np.testing.assert_allclose(iv[:, :, 10:].mean(axis=(1, 2)), [0.0, 1.0, 0.0], atol=1e-6)


def test_intensidad_sin_omni_es_cero(rng):
    x = rng.standard_normal((4, 4096))
    x[0] = 0.0
    assert np.all(intensity_vectors(stft(x)) == 0.0)


@hsettings(max_examples=20, deadline=None)
@given(gain=st.floats(min_value=0.1, max_value=10.0), seed=st.integers(0, 1000))
def test_intensidad_invariante_a_la_ganancia(gain, seed):
    x = np.random.default_rng(seed).standard_normal((4, 2048))
    np.testing.assert_allclose(intensity_vectors(stft(gain * x)), intensity_vectors(stft(x)), atol=1e-9)


def test_extract_features_forma_y_determinismo(noise_clip):
    a = extract_features(noise_clip)
    b = extract_features(noise_clip)
    assert a.shape == (7, 372, 64)
    assert a.dtype == np.float32
    assert a.tobytes() == b.tobytes()
    assert np.all(np.abs(a[4:]) <= 1.0 + 1e-6)


def test_extract_features_silencio():
    feats = extract_features(np.zeros((4, 5 * SR)))
    np.testing.assert_allclose(feats[:4], -100.0)
    assert np.all(feats[4:] == 0.0)
