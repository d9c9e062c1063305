# synth/tests/conftest.py
import numpy as np
import pytest

from features.services.spectral import extract_features
from synth.services.rooms import RoomPreset


@pytest.fixture
def rng():
    return np.random.default_rng(7)


@pytest.fixture
def anechoic_room():
    return RoomPreset("anecoica", t60=0.0, snr_db=30.0, diffuse_gain=0.0, rng_seed=1)


@pytest.fixture
def reverberant_room():
    return RoomPreset("reverberante", t60=0.8, snr_db=20.0, diffuse_gain=0.4, rng_seed=2)


def doa_per_label_frame(clip, hop=320, window_len=1024, sample_rate=24000, label_hop=0.1):
    """Azimut/elevación por frame de 100 ms: intensidad ponderada por la energía mel de W."""
    feat = extract_features(clip).astype(np.float64)
    energy = 10.0 ** (feat[0] / 10.0)
    iv = feat[4:7]
    centers = (np.arange(feat.shape[1]) * hop + window_len / 2) / sample_rate
    labels = np.floor(centers / label_hop + 1e-9).astype(int)
    out = {}
    for f in np.unique(labels):
        mask = labels == f
        x, y, z = (iv[:, mask] * energy[mask]).sum(axis=(1, 2))
        out[int(f)] = (np.degrees(np.arctan2(y, x)), np.degrees(np.arctan2(z, np.hypot(x, y))))
    return out


def angle_between(az1, el1, az2, el2):
    a = np.deg2rad([az1, el1, az2, el2])
    u = np.array([np.cos(a[1]) * np.cos(a[0]), np.cos(a[1]) * np.sin(a[0]), np.sin(a[1])])
    v = np.array([np.cos(a[3]) * np.cos(a[2]), np.cos(a[3]) * np.sin(a[2]), np.sin(a[3])])
    return float(np.degrees(np.arccos(np.clip(u @ v, -1.0, 1.0))))
