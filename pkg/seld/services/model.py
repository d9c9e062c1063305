# seld/services/model.py
"""CRNN con salida ACCDOA.

Cuatro bloques convolucionales (2 x (conv 3x3 + BatchNorm + ReLU) y pooling
medio tiempo x frecuencia), media global en frecuencia, BiGRU de una capa,
lineal 256 -> 39 y tanh. Con la configuración por defecto una entrada
[7, 372, 64] produce [46, 13, 3].

Los parámetros entrenables y las estadísticas corrientes de BatchNorm viven
en dos ``ParamSet`` separados; ``forward`` es una función pura de ambos.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Mapping, Tuple

import numpy as np

from autodiff import functional as F
from autodiff.params import ParamSet
from autodiff.tensor import Tensor, no_grad
from core.config import parse_int_list, parse_pool_sizes
from core.exceptions import ConfigError, ShapeError

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class CrnnConfig:
    in_channels: int = 7
    n_classes: int = 13
    conv_channels: Tuple[int, ...] = (32, 64, 128, 256)
    pool_sizes: Tuple[Tuple[int, int], ...] = ((2, 2), (2, 2), (2, 2), (1, 2))
    gru_hidden: int = 128
    bn_momentum: float = 0.1
    bn_eps: float = 1e-5

    def __post_init__(self):
        if len(self.conv_channels) != len(self.pool_sizes):
            raise ConfigError(
                f"conv_channels ({len(self.conv_channels)}) y pool_sizes ({len(self.pool_sizes)}) no coinciden"
            )
        if min(self.conv_channels, default=0) <= 0 or self.gru_hidden <= 0 or self.n_classes <= 0:
            raise ConfigError("tamaños del modelo deben ser positivos")

    @classmethod
    def from_sections(cls, sections: Mapping) -> "CrnnConfig":
        model = sections["model"]
        return cls(
            n_classes=int(model["n_classes"]),
            conv_channels=parse_int_list(model["conv_channels"]),
            pool_sizes=parse_pool_sizes(model["pool_sizes"]),
            gru_hidden=int(model["gru_hidden"]),
        )

    @property
    def time_pool(self) -> int:
        return int(np.prod([kt for kt, _ in self.pool_sizes]))

    def output_frames(self, n_frames: int) -> int:
        for kt, _ in self.pool_sizes:
            n_frames //= kt
        return n_frames


def _glorot(rng: np.random.Generator, shape, fan_in: int, fan_out: int) -> np.ndarray:
    limit = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-limit, limit, size=shape)


def _orthogonal(rng: np.random.Generator, n: int) -> np.ndarray:
    q, r = np.linalg.qr(rng.standard_normal((n, n)))
    return q * np.sign(np.diag(r))


def init_params(cfg: CrnnConfig, rng: np.random.Generator, dtype=np.float32) -> Tuple[ParamSet, ParamSet]:
    """Pesos iniciales y estadísticas de BatchNorm (media 0, varianza 1).

    Conv y lineal: Glorot uniforme. GRU: entrada Glorot uniforme por compuerta,
    recurrente ortogonal por compuerta, sesgos a cero. Las convoluciones no
    llevan sesgo; BatchNorm aporta beta.
    """
    params, buffers = [], []
    cin = cfg.in_channels
    for b, cout in enumerate(cfg.conv_channels):
        for layer in range(2):
            key = f"block{b}.{layer}"
            fan_in, fan_out = cin * 9, cout * 9
            params.append((f"{key}.conv", _glorot(rng, (cout, cin, 3, 3), fan_in, fan_out)))
            params.append((f"{key}.bn_gamma", np.ones(cout)))
            params.append((f"{key}.bn_beta", np.zeros(cout)))
            buffers.append((f"{key}.bn_mean", np.zeros(cout)))
            buffers.append((f"{key}.bn_var", np.ones(cout)))
            cin = cout

    h = cfg.gru_hidden
    for direction in ("fw", "bw"):
        w_ih = np.concatenate([_glorot(rng, (h, cin), cin, h) for _ in range(3)])
        w_hh = np.concatenate([_orthogonal(rng, h) for _ in range(3)])
        params += [
            (f"gru.{direction}.w_ih", w_ih),
            (f"gru.{direction}.w_hh", w_hh),
            (f"gru.{direction}.b_ih", np.zeros(3 * h)),
            (f"gru.{direction}.b_hh", np.zeros(3 * h)),
        ]

    n_out = 3 * cfg.n_classes
    params.append(("fc.weight", _glorot(rng, (n_out, 2 * h), 2 * h, n_out)))
    params.append(("fc.bias", np.zeros(n_out)))

    theta = ParamSet((k, Tensor(v.astype(dtype), requires_grad=True)) for k, v in params)
    stats = ParamSet((k, Tensor(v.astype(dtype))) for k, v in buffers)
    logger.debug("CRNN inicializada: %d parámetros", theta.count())
    return theta, stats


def _gru_weights(params: ParamSet, direction: str):
    return tuple(params[f"gru.{direction}.{n}"] for n in ("w_ih", "w_hh", "b_ih", "b_hh"))


def forward(
    feat,
    params: ParamSet,
    buffers: ParamSet,
    cfg: CrnnConfig = CrnnConfig(),
    training: bool = False,
) -> Tuple[Tensor, ParamSet]:
    """[B, C, T, F] (o [C, T, F]) -> ([B, T', clases, 3], estadísticas nuevas).

    En evaluación las estadísticas devueltas son las mismas que entraron.
    """
    dtype = params["fc.weight"].dtype
    x = feat if isinstance(feat, Tensor) else Tensor(np.asarray(feat, dtype=dtype))
    if x.ndim == 3:
        x = x.reshape(1, *x.shape)
    if x.ndim != 4 or x.shape[1] != cfg.in_channels:
        raise ShapeError("crnn", x.shape, (None, cfg.in_channels, None, None), "entrada [B, C, T, F]")

    new_stats = []
    for b, (kt, kf) in enumerate(cfg.pool_sizes):
        for layer in range(2):
            key = f"block{b}.{layer}"
            x = F.conv2d_3x3(x, params[f"{key}.conv"])
            x, mean, var = F.batchnorm2d(
                x,
                params[f"{key}.bn_gamma"],
                params[f"{key}.bn_beta"],
                buffers[f"{key}.bn_mean"].data,
                buffers[f"{key}.bn_var"].data,
                training=training,
                momentum=cfg.bn_momentum,
                eps=cfg.bn_eps,
            )
            new_stats += [(f"{key}.bn_mean", Tensor(mean)), (f"{key}.bn_var", Tensor(var))]
            x = F.relu(x)
        x = F.avgpool2d(x, kt, kf)

    seq = F.global_avgpool_freq(x)
    seq = F.bigru(seq, _gru_weights(params, "fw"), _gru_weights(params, "bw"))
    out = F.tanh(F.linear(seq, params["fc.weight"], params["fc.bias"]))
    batch, steps = out.shape[0], out.shape[1]
    return out.reshape(batch, steps, cfg.n_classes, 3), ParamSet(new_stats)


def predict(feat, params: ParamSet, buffers: ParamSet, cfg: CrnnConfig = CrnnConfig()) -> np.ndarray:
    """Salida ACCDOA en modo evaluación, sin grafo."""
    with no_grad():
        out, _ = forward(feat, params, buffers, cfg, training=False)
    return out.data
