"""Capas de la red como funciones puras sobre ``Tensor``.

Los parámetros entran siempre como argumento: una misma función sirve para los
parámetros meta, para los adaptados de una tarea o para los del fine-tuning.
"""

from __future__ import annotations

import logging
from typing import Optional, Sequence, Tuple

import numpy as np

from core.exceptions import ShapeError

from .tensor import Tensor, as_tensor, concat, pad, relu, sigmoid, stack, tanh, unfold2d

logger = logging.getLogger(__name__)

__all__ = [
    "conv2d_3x3",
    "batchnorm2d",
    "relu",
    "avgpool2d",
    "global_avgpool_freq",
    "gru_direction",
    "bigru",
    "linear",
    "tanh",
    "mse_loss",
]


def conv2d_3x3(x: Tensor, weight: Tensor, bias: Optional[Tensor] = None) -> Tensor:
    """Convolución 3x3, paso 1, relleno 1 (misma forma espacial).

    x: [B, Cin, H, W]; weight: [Cout, Cin, 3, 3].
    """
    if x.ndim != 4 or weight.ndim != 4 or weight.shape[2:] != (3, 3):
        raise ShapeError("conv2d_3x3", x.shape, weight.shape)
    if x.shape[1] != weight.shape[1]:
        raise ShapeError("conv2d_3x3", x.shape, weight.shape, "canales de entrada")
    cout = weight.shape[0]
    xp = pad(x, ((0, 0), (0, 0), (1, 1), (1, 1)))
    cols = unfold2d(xp, 3, 3)  # [B, H, W, Cin*9]
    kernel = weight.reshape(cout, -1).transpose(1, 0)  # [Cin*9, Cout]
    out = cols @ kernel  # [B, H, W, Cout]
    if bias is not None:
        out = out + bias
    return out.transpose(0, 3, 1, 2)


def batchnorm2d(
    x: Tensor,
    gamma: Tensor,
    beta: Tensor,
    running_mean: np.ndarray,
    running_var: np.ndarray,
    training: bool,
    momentum: float = 0.1,
    eps: float = 1e-5,
) -> Tuple[Tensor, np.ndarray, np.ndarray]:
    """BatchNorm por canal sobre [B, C, H, W].

    Devuelve ``(y, media, varianza)``: en entrenamiento las estadísticas
    corrientes nuevas (varianza insesgada, como PyTorch); en evaluación las
    mismas que entraron. Nunca modifica los arreglos recibidos.
    """
    if x.ndim != 4 or gamma.shape != (x.shape[1],):
        raise ShapeError("batchnorm2d", x.shape, gamma.shape)
    c = x.shape[1]
    view = (1, c, 1, 1)
    if training:
        mean = x.mean(axis=(0, 2, 3), keepdims=True)
        centered = x - mean
        var = (centered * centered).mean(axis=(0, 2, 3), keepdims=True)
        xhat = centered / ((var + eps) ** 0.5)
        n = x.size // c
        batch_var = var.data.reshape(c) * (n / max(n - 1, 1))
        new_mean = (1.0 - momentum) * running_mean + momentum * mean.data.reshape(c)
        new_var = (1.0 - momentum) * running_var + momentum * batch_var
        new_mean = new_mean.astype(running_mean.dtype, copy=False)
        new_var = new_var.astype(running_var.dtype, copy=False)
    else:
        mean = Tensor(running_mean.reshape(view).astype(x.dtype, copy=False))
        std = Tensor(np.sqrt(running_var.reshape(view) + eps).astype(x.dtype, copy=False))
        xhat = (x - mean) / std
        new_mean, new_var = running_mean, running_var
    y = xhat * gamma.reshape(view) + beta.reshape(view)
    return y, new_mean, new_var


def avgpool2d(x: Tensor, kt: int, kf: int) -> Tensor:
    """Media en ventanas kt x kf sin solape; recorta el resto (suelo)."""
    if x.ndim != 4:
        raise ShapeError("avgpool2d", x.shape, (kt, kf))
    b, c, t, f = x.shape
    to, fo = t // kt, f // kf
    if to == 0 or fo == 0:
        raise ShapeError("avgpool2d", x.shape, (kt, kf), "ventana mayor que la entrada")
    if kt == 1 and kf == 1:
        return x
    if (to * kt, fo * kf) != (t, f):
        x = x[:, :, : to * kt, : fo * kf]
    blocks = x.reshape(b, c, to, kt, fo, kf)
    return blocks.mean(axis=(3, 5))


def global_avgpool_freq(x: Tensor) -> Tensor:
    """[B, C, T, F] -> [B, T, C]: media sobre frecuencia, listo para la GRU."""
    if x.ndim != 4:
        raise ShapeError("global_avgpool_freq", x.shape)
    return x.mean(axis=3).transpose(0, 2, 1)


def linear(x: Tensor, weight: Tensor, bias: Optional[Tensor] = None) -> Tensor:
    """x @ weight.T + bias, weight: [out, in]."""
    if x.shape[-1] != weight.shape[1]:
        raise ShapeError("linear", x.shape, weight.shape)
    out = x @ weight.transpose(1, 0)
    if bias is not None:
        out = out + bias
    return out


def gru_direction(
    x: Tensor,
    w_ih: Tensor,
    w_hh: Tensor,
    b_ih: Tensor,
    b_hh: Tensor,
    reverse: bool = False,
) -> Tensor:
    """Una dirección de GRU (convención r, z, n de PyTorch).

    x: [B, T, I]; w_ih: [3H, I]; w_hh: [3H, H]. Devuelve [B, T, H] alineado
    con la entrada aunque se recorra al revés.
    """
    if x.ndim != 3 or w_ih.shape[1] != x.shape[2]:
        raise ShapeError("gru", x.shape, w_ih.shape)
    hidden = w_hh.shape[1]
    if w_ih.shape[0] != 3 * hidden or w_hh.shape[0] != 3 * hidden:
        raise ShapeError("gru", w_ih.shape, w_hh.shape, "pesos de compuertas")
    batch, steps = x.shape[0], x.shape[1]

    gi = linear(x, w_ih, b_ih)  # [B, T, 3H] todas las entradas de una vez
    w_hh_t = w_hh.transpose(1, 0)
    h = Tensor(np.zeros((batch, hidden), dtype=x.dtype))
    outputs = [None] * steps
    order = range(steps - 1, -1, -1) if reverse else range(steps)
    for t in order:
        gx = gi[:, t, :]
        gh = h @ w_hh_t + b_hh
        r = sigmoid(gx[:, :hidden] + gh[:, :hidden])
        z = sigmoid(gx[:, hidden:2 * hidden] + gh[:, hidden:2 * hidden])
        n = tanh(gx[:, 2 * hidden:] + r * gh[:, 2 * hidden:])
        h = (1.0 - z) * n + z * h
        outputs[t] = h
    return stack(outputs, axis=1)


def bigru(x: Tensor, forward: Sequence[Tensor], backward: Sequence[Tensor]) -> Tensor:
    """GRU bidireccional de una capa; concatena [adelante, atrás] -> [B, T, 2H].

    ``forward`` y ``backward`` son tuplas (w_ih, w_hh, b_ih, b_hh).
    """
    fw = gru_direction(x, *forward, reverse=False)
    bw = gru_direction(x, *backward, reverse=True)
    return concat([fw, bw], axis=2)


def mse_loss(pred: Tensor, target) -> Tensor:
    """Error cuadrático medio sobre todos los elementos."""
    target = as_tensor(target, like=pred)
    if pred.shape != target.shape:
        raise ShapeError("mse_loss", pred.shape, target.shape)
    diff = pred - target
    return (diff * diff).mean()
