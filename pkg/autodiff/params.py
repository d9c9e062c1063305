# autodiff/params.py
"""Conjuntos ordenados de parámetros (Θ) y su formato de checkpoint "MSPS"."""

from __future__ import annotations

import hashlib
import logging
import struct
from pathlib import Path
from typing import Callable, Dict, Iterable, Iterator, List, Mapping, Tuple

import numpy as np

from core.exceptions import DataError, ShapeError

from .tensor import Tensor

logger = logging.getLogger(__name__)

MSPS_MAGIC = b"MSPS"
MSPS_VERSION = 1


class ParamSet:
    """Lista ordenada de (nombre, Tensor) con nombres únicos.

    El orden se conserva en toda copia o actualización, de modo que las
    operaciones elemento a elemento entre dos conjuntos tienen sentido.
    """

    __slots__ = ("_entries",)

    def __init__(self, entries: Iterable[Tuple[str, Tensor]] = ()):
        self._entries: Dict[str, Tensor] = {}
        for name, value in entries:
            if name in self._entries:
                raise ValueError(f"ParamSet: nombre duplicado '{name}'")
            self._entries[name] = value if isinstance(value, Tensor) else Tensor(value)

    @classmethod
    def from_arrays(cls, arrays: Mapping[str, np.ndarray], requires_grad: bool = False) -> "ParamSet":
        return cls((k, Tensor(np.array(v, copy=True), requires_grad=requires_grad)) for k, v in arrays.items())

    # -------- acceso --------
    def names(self) -> List[str]:
        return list(self._entries)

    def tensors(self) -> List[Tensor]:
        return list(self._entries.values())

    def items(self):
        return self._entries.items()

    def arrays(self) -> Dict[str, np.ndarray]:
        return {k: v.data for k, v in self._entries.items()}

    def __getitem__(self, name: str) -> Tensor:
        return self._entries[name]

    def __contains__(self, name: str) -> bool:
        return name in self._entries

    def __iter__(self) -> Iterator[str]:
        return iter(self._entries)

    def __len__(self) -> int:
        return len(self._entries)

    def __repr__(self) -> str:
        return f"ParamSet({len(self)} tensores, {self.count()} valores)"

    def count(self) -> int:
        """Número total de valores escalares."""
        return int(sum(t.size for t in self._entries.values()))

    # -------- copias --------
    def detach(self) -> "ParamSet":
        return ParamSet((k, Tensor(v.data)) for k, v in self.items())

    def clone(self, requires_grad: bool = True) -> "ParamSet":
        """Copia profunda como hojas nuevas (sin historia)."""
        return ParamSet(
            (k, Tensor(np.array(v.data, copy=True), requires_grad=requires_grad)) for k, v in self.items()
        )

    def astype(self, dtype) -> "ParamSet":
        return ParamSet(
            (k, Tensor(v.data.astype(dtype), requires_grad=v.requires_grad)) for k, v in self.items()
        )

    # -------- aritmética --------
    def check_aligned(self, other: "ParamSet", op: str = "ParamSet") -> None:
        if self.names() != other.names():
            missing = sorted(set(self.names()) ^ set(other.names()))
            raise ShapeError(op, (len(self),), (len(other),), f"nombres desalineados: {missing[:5]}")
        for name in self._entries:
            if self[name].shape != other[name].shape:
                raise ShapeError(f"{op}[{name}]", self[name].shape, other[name].shape)

    def map(self, fn: Callable[[Tensor], Tensor]) -> "ParamSet":
        return ParamSet((k, fn(v)) for k, v in self.items())

    def zip_map(self, other: "ParamSet", fn: Callable[[Tensor, Tensor], Tensor]) -> "ParamSet":
        self.check_aligned(other)
        return ParamSet((k, fn(v, other[k])) for k, v in self.items())

    def __add__(self, other: "ParamSet") -> "ParamSet":
        return self.zip_map(other, lambda a, b: a + b)

    def __sub__(self, other: "ParamSet") -> "ParamSet":
        return self.zip_map(other, lambda a, b: a - b)

    def scale(self, factor: float) -> "ParamSet":
        return self.map(lambda t: t * factor)

    # -------- vistas --------
    def flat(self) -> np.ndarray:
        """Vector plano en el orden de los nombres."""
        if not self._entries:
            return np.zeros(0)
        return np.concatenate([v.data.reshape(-1) for v in self._entries.values()])

    def checksum(self) -> str:
        """sha256 de nombres, formas y bytes; igual solo si todo es idéntico."""
        h = hashlib.sha256()
        for name, t in self.items():
            h.update(name.encode("utf-8"))
            h.update(str(t.shape).encode("ascii"))
            h.update(str(t.dtype).encode("ascii"))
            h.update(np.ascontiguousarray(t.data).tobytes())
        return h.hexdigest()

    def is_finite(self) -> bool:
        return all(np.all(np.isfinite(t.data)) for t in self._entries.values())


def save_paramset(params: ParamSet, path: Path) -> Path:
    """Escribe el checkpoint en formato MSPS (little-endian, float32)."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_suffix(path.suffix + ".tmp")
    with tmp.open("wb") as fh:
        fh.write(MSPS_MAGIC)
        fh.write(struct.pack("<II", MSPS_VERSION, len(params)))
        for name, t in params.items():
            raw = name.encode("utf-8")
            fh.write(struct.pack("<I", len(raw)))
            fh.write(raw)
            fh.write(struct.pack("<I", t.ndim))
            if t.ndim:
                fh.write(struct.pack(f"<{t.ndim}I", *t.shape))
            fh.write(np.ascontiguousarray(t.data, dtype="<f4").tobytes())
    tmp.replace(path)
    logger.debug("Checkpoint escrito: %s (%d tensores)", path, len(params))
    return path


def load_paramset(path: Path, requires_grad: bool = False) -> ParamSet:
    """Lee un checkpoint MSPS; cualquier inconsistencia es ``DataError``."""
    path = Path(path)
    try:
        blob = path.read_bytes()
    except OSError as exc:
        raise DataError(f"No se puede leer el checkpoint {path}: {exc}") from exc

    def take(offset: int, size: int) -> bytes:
        if offset + size > len(blob):
            raise DataError(f"Checkpoint truncado: {path}")
        return blob[offset:offset + size]

    if take(0, 4) != MSPS_MAGIC:
        raise DataError(f"Checkpoint con magic inválido: {path}")
    version, count = struct.unpack("<II", take(4, 8))
    if version != MSPS_VERSION:
        raise DataError(f"Versión de checkpoint no soportada ({version}): {path}")
    offset = 12
    entries = []
    for _ in range(count):
        (name_len,) = struct.unpack("<I", take(offset, 4))
        offset += 4
        name = take(offset, name_len).decode("utf-8")
        offset += name_len
        (rank,) = struct.unpack("<I", take(offset, 4))
        offset += 4
        dims = struct.unpack(f"<{rank}I", take(offset, 4 * rank)) if rank else ()
        offset += 4 * rank
        n = int(np.prod(dims)) if dims else 1
        data = np.frombuffer(take(offset, 4 * n), dtype="<f4").reshape(dims).astype(np.float32)
        offset += 4 * n
        entries.append((name, Tensor(data, requires_grad=requires_grad)))
    if offset != len(blob):
        raise DataError(f"Checkpoint con bytes sobrantes: {path}")
    return ParamSet(entries)
