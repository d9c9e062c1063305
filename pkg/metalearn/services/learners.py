# metalearn/services/learners.py
"""Modelos que el motor de meta-aprendizaje sabe adaptar.

Un learner agrupa ejemplos en un lote (``collate``), calcula la pérdida de un
lote para unos parámetros dados (``loss``) y predice sin grafo (``predict``).
Las estadísticas de BatchNorm viajan aparte como ``buffers``; un modelo sin
BatchNorm usa un ``ParamSet`` vacío.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Any, Protocol, Sequence, Tuple

import numpy as np

from autodiff import functional as F
from autodiff.params import ParamSet
from autodiff.tensor import Tensor, no_grad
from core.exceptions import ShapeError
from seld.services.model import CrnnConfig, forward, init_params
from seld.services.targets import make_targets, seld_loss

logger = logging.getLogger(__name__)

Batch = Tuple[np.ndarray, np.ndarray]


class Learner(Protocol):
    def init(self, rng: np.random.Generator) -> Tuple[ParamSet, ParamSet]: ...

    def collate(self, items: Sequence[Any]) -> Batch: ...

    def loss(self, params: ParamSet, buffers: ParamSet, batch: Batch, training: bool) -> Tuple[Tensor, ParamSet]: ...

    def predict(self, params: ParamSet, buffers: ParamSet, inputs: np.ndarray) -> np.ndarray: ...


@dataclass(frozen=True)
class CrnnLearner:
    """CRNN SELD; los ejemplos son segmentos con ``features()`` y ``annotation``."""

    cfg: CrnnConfig = CrnnConfig()
    dtype: Any = np.float32

    def init(self, rng):
        return init_params(self.cfg, rng, dtype=self.dtype)

    def collate(self, items):
        feats = np.stack([np.asarray(seg.features(), dtype=self.dtype) for seg in items])
        n_out = self.cfg.output_frames(feats.shape[2])
        targets = np.stack(
            [
                make_targets(seg.annotation, n_out, self.cfg.n_classes, self.cfg.time_pool, dtype=self.dtype)
                for seg in items
            ]
        )
        return feats, targets

    def loss(self, params, buffers, batch, training):
        feats, targets = batch
        out, stats = forward(feats, params, buffers, self.cfg, training=training)
        return seld_loss(out, targets), stats

    def predict(self, params, buffers, inputs):
        with no_grad():
            out, _ = forward(inputs, params, buffers, self.cfg, training=False)
        return out.data


@dataclass(frozen=True)
class MlpLearner:
    """Perceptrón con ReLU; los ejemplos son pares (x, y) de vectores."""

    sizes: Tuple[int, ...] = (1, 40, 40, 1)
    dtype: Any = np.float64

    def init(self, rng):
        entries = []
        for i, (fan_in, fan_out) in enumerate(zip(self.sizes[:-1], self.sizes[1:])):
            weight = rng.standard_normal((fan_out, fan_in)) * np.sqrt(2.0 / fan_in)
            entries.append((f"layer{i}.weight", weight.astype(self.dtype)))
            entries.append((f"layer{i}.bias", np.zeros(fan_out, dtype=self.dtype)))
        return ParamSet.from_arrays(dict(entries), requires_grad=True), ParamSet()

    def collate(self, items):
        xs, ys = zip(*items)
        n = len(items)
        return (
            np.asarray(xs, dtype=self.dtype).reshape(n, -1),
            np.asarray(ys, dtype=self.dtype).reshape(n, -1),
        )

    def apply(self, params: ParamSet, inputs) -> Tensor:
        x = inputs if isinstance(inputs, Tensor) else Tensor(np.asarray(inputs, dtype=self.dtype))
        if x.ndim != 2 or x.shape[1] != self.sizes[0]:
            raise ShapeError("mlp", x.shape, (None, self.sizes[0]))
        n_layers = len(self.sizes) - 1
        for i in range(n_layers):
            x = F.linear(x, params[f"layer{i}.weight"], params[f"layer{i}.bias"])
            if i < n_layers - 1:
                x = F.relu(x)
        return x

    def loss(self, params, buffers, batch, training):
        inputs, targets = batch
        return F.mse_loss(self.apply(params, inputs), targets), buffers

    def predict(self, params, buffers, inputs):
        with no_grad():
            return self.apply(params, inputs).data
