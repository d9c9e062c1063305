# metalearn/tests/conftest.py
from dataclasses import dataclass

import numpy as np
import pytest

from autodiff.params import ParamSet
from autodiff.tensor import Tensor
from core.annotations import Annotation, AnnotationRow
from metalearn.services.config import MetaConfig
from metalearn.services.learners import CrnnLearner
from metalearn.services.sampling import Segment
from seld.services.model import CrnnConfig

TINY_FRAMES = 8
TINY_SEGMENT_SECONDS = 0.4


@pytest.fixture
def rng():
    return np.random.default_rng(31)


@dataclass(frozen=True)
class QuadraticLearner:
    """L(θ) = ½ (θ - c)ᵀ A (θ - c); cada ejemplo es un par (A, c)."""

    dim: int = 2

    def init(self, rng):
        theta = rng.normal(size=(self.dim, 1))
        return ParamSet.from_arrays({"theta": theta}, requires_grad=True), ParamSet()

    def collate(self, items):
        a = np.mean([np.asarray(i[0], dtype=np.float64) for i in items], axis=0)
        c = np.mean([np.asarray(i[1], dtype=np.float64).reshape(self.dim, 1) for i in items], axis=0)
        return a, c

    def loss(self, params, buffers, batch, training):
        a, c = batch
        d = params["theta"] - Tensor(c)
        return 0.5 * (d.transpose(1, 0) @ (Tensor(a) @ d)).sum(), buffers

    def predict(self, params, buffers, inputs):
        return params["theta"].data


def random_spd(rng, dim=2, low=0.5, high=4.0):
    q, _ = np.linalg.qr(rng.normal(size=(dim, dim)))
    return q @ np.diag(rng.uniform(low, high, size=dim)) @ q.T


@pytest.fixture
def quadratic():
    return QuadraticLearner()


@pytest.fixture
def tiny_crnn():
    cfg = CrnnConfig(n_classes=2, conv_channels=(2, 3), pool_sizes=((2, 1), (1, 2)), gru_hidden=3)
    return CrnnLearner(cfg, dtype=np.float64)


def tiny_segments(rng, room_id, n, n_label_frames=4):
    """Segmentos en memoria con características aleatorias y un evento por segmento."""
    segments = []
    for i in range(n):
        cls = int(rng.integers(0, 2))
        az, el = float(rng.uniform(-180, 180)), float(rng.uniform(-60, 60))
        ann = Annotation([AnnotationRow(f, cls, 0, az, el) for f in range(n_label_frames)])
        segments.append(
            Segment(
                clip_id=f"{room_id}_clip{i // 2:02d}",
                index=i % 2,
                room_id=room_id,
                annotation=ann,
                data=rng.normal(size=(7, TINY_FRAMES, 2)),
            )
        )
    return segments


@pytest.fixture
def tiny_rooms(rng):
    return {f"room{r}": tiny_segments(rng, f"room{r}", 6) for r in range(5)}


@pytest.fixture
def tiny_meta():
    return MetaConfig(
        rooms_per_batch=2,
        samples_per_room=4,
        k_support=2,
        q_query=2,
        inner_lr=0.01,
        inner_steps=2,
        meta_lr=0.01,
        weight_decay=0.0,
    )
