"""Subflujos aleatorios con nombre derivados de una semilla raíz.

Toda la aleatoriedad del laboratorio sale de una semilla raíz: cada consumidor
(dataset, init, task-sampling, una sala, un clip) pide su propio generador por
nombre, de modo que el orden de ejecución o el paralelismo no cambian la salida.
"""

from __future__ import annotations

import hashlib

import numpy as np


def derive_seed(*parts) -> int:
    """Semilla de 64 bits estable a partir de una tupla de partes."""
    key = "|".join(str(p) for p in parts).encode("utf-8")
    return int.from_bytes(hashlib.sha256(key).digest()[:8], "little")


def substream(root_seed: int, name: str, *extra) -> np.random.Generator:
    """Generador independiente para ``name`` bajo ``root_seed``."""
    return np.random.default_rng(derive_seed(root_seed, name, *extra))
