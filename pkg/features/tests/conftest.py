# features/tests/conftest.py
import numpy as np
import pandas as pd
import pytest

from core.datasets import DatasetLayout
from features.services.audio_io import FoaClip, write_foa_wav

SR = 24000


@pytest.fixture
def rng():
    return np.random.default_rng(2023)


def encode(mono, azimuth_deg, elevation_deg):
    """Panorámica FOA ACN/SN3D (W, Y, Z, X)."""
    az, el = np.deg2rad(azimuth_deg), np.deg2rad(elevation_deg)
    gains = np.array([1.0, np.cos(el) * np.sin(az), np.sin(el), np.cos(el) * np.cos(az)])
    return gains[:, None] * mono[None, :]


@pytest.fixture
def noise_clip(rng):
    """Fuente de ruido blanco anecoica a 30° de azimut, 10° de elevación (5 s)."""
    mono = 0.1 * rng.standard_normal(5 * SR)
    return FoaClip(encode(mono, 30.0, 10.0), clip_id="ruido")


@pytest.fixture
def tiny_dataset(tmp_path, rng):
    """Dataset mínimo: dos clips de 11 s (dos segmentos de 5 s cada uno)."""
    layout = DatasetLayout(tmp_path / "ds")
    rows = []
    for i, room in enumerate(["sala_a", "sala_b"]):
        clip_id = f"{room}_clip00"
        mono = 0.1 * rng.standard_normal(11 * SR)
        write_foa_wav(layout.wav(clip_id), FoaClip(encode(mono, 45.0 * i, 0.0)))
        rows.append({"clip_id": clip_id, "room_id": room, "split": "train"})
    pd.DataFrame(rows).to_csv(layout.manifest, index=False)
    return layout
