# seld/tests/conftest.py
import numpy as np
import pytest

from core.annotations import Annotation, AnnotationRow
from seld.services.model import CrnnConfig, init_params


@pytest.fixture
def rng():
    return np.random.default_rng(99)


@pytest.fixture
def tiny_cfg():
    """CRNN mínima: 2 bandas mel, 8 tramas, dos bloques, 2 clases."""
    return CrnnConfig(
        in_channels=7,
        n_classes=2,
        conv_channels=(2, 3),
        pool_sizes=((2, 1), (1, 2)),
        gru_hidden=3,
    )


@pytest.fixture
def tiny_model(tiny_cfg, rng):
    params, buffers = init_params(tiny_cfg, rng, dtype=np.float64)
    return tiny_cfg, params, buffers


def block_annotation(blocks):
    """[(primer_frame, ultimo_frame_excl, clase, pista, az, el), ...] -> Annotation."""
    rows = []
    for first, last, cls, track, az, el in blocks:
        rows += [AnnotationRow(f, cls, track, float(az), float(el)) for f in range(first, last)]
    return Annotation(rows)
