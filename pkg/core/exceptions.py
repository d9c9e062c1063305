"""Errores del laboratorio.

Cada error de dominio lleva el código de salida que deben devolver los
comandos de ``manage.py`` (2 configuración, 3 datos, 4 fallo numérico).
"""

from __future__ import annotations

__all__ = [
    "MetaSeldError",
    "ConfigError",
    "DataError",
    "ClipTooShortError",
    "AudioFormatError",
    "PolyphonyError",
    "DatasetError",
    "FeatureCacheError",
    "TaskSamplingError",
    "ReportMergeError",
    "NumericalError",
    "NonFiniteError",
    "ShapeError",
    "MetricsError",
]


class MetaSeldError(Exception):
    """Error fatal del laboratorio."""

    exit_code = 1


class ConfigError(MetaSeldError):
    """Configuración inválida (fichero INI, invariantes de MetaConfig)."""

    exit_code = 2


class DataError(MetaSeldError):
    """Datos ausentes, corruptos o inconsistentes."""

    exit_code = 3


class ClipTooShortError(DataError):
    """El clip no alcanza una ventana de análisis."""


class AudioFormatError(DataError):
    """WAV ilegible o con formato distinto de FOA a 24 kHz."""


class PolyphonyError(DataError):
    """Más eventos simultáneos de los permitidos en algún frame."""

    def __init__(self, frames):
        self.frames = sorted(frames)
        preview = ", ".join(str(f) for f in self.frames[:20])
        extra = "" if len(self.frames) <= 20 else f" (+{len(self.frames) - 20} más)"
        super().__init__(f"polyphony cap exceeded at frames: {preview}{extra}")


class DatasetError(DataError):
    """Fallo de E/S o de estructura al construir o leer un dataset."""


class FeatureCacheError(DataError):
    """Fichero de características con cabecera o tamaño inválidos."""


class TaskSamplingError(DataError):
    """Una sala no tiene segmentos suficientes para formar una tarea."""


class ReportMergeError(DataError):
    """Ejecuciones con datasets distintos no se pueden comparar."""


class NumericalError(MetaSeldError):
    """Pérdida o gradiente no finito durante el entrenamiento."""

    exit_code = 4


class NonFiniteError(NumericalError):
    """Una operación produjo NaN o infinito con el chequeo activo."""


class ShapeError(ValueError):
    """Formas incompatibles en una operación."""

    def __init__(self, op: str, left, right=None, detail: str = ""):
        self.op = op
        msg = f"{op}: shape mismatch {tuple(left)}"
        if right is not None:
            msg += f" vs {tuple(right)}"
        if detail:
            msg += f" ({detail})"
        super().__init__(msg)


class MetricsError(ValueError):
    """Entrada inválida para las métricas SELD."""
