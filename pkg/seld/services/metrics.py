# seld/services/metrics.py
"""Métricas SELD conjuntas: ER/F con umbral de 20°, LE/LR dependientes de clase.

Por frame de 100 ms y por clase se asignan referencias y predicciones con el
algoritmo húngaro sobre la distancia angular. Un par asignado es verdadero
positivo si está a 20° o menos; si no, cuenta como FN y FP a la vez, pero su
error angular sigue entrando en LE y su acierto de clase en LR.

ER es micro (sumas de S, D, I y N sobre frames); F, LE y LR son macro sobre
las clases con al menos una referencia. Una clase sin pares asignados aporta
180° a LE.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np
from scipy.optimize import linear_sum_assignment

from core.annotations import Annotation
from core.exceptions import MetricsError

from .targets import N_CLASSES, doa_unit_vector

logger = logging.getLogger(__name__)

DOA_THRESHOLD_DEG = 20.0
MAX_LE_DEG = 180.0

Event = Tuple[int, np.ndarray]  # (clase, vector DOA)


def angular_distance(u, v) -> float:
    """Ángulo en grados entre dos direcciones (se normalizan aquí)."""
    u = np.asarray(u, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    nu, nv = np.linalg.norm(u), np.linalg.norm(v)
    if nu == 0.0 or nv == 0.0:
        raise MetricsError("angular_distance: zero vector")
    return float(np.degrees(np.arccos(np.clip(np.dot(u / nu, v / nv), -1.0, 1.0))))


def distance_matrix(refs: Sequence[np.ndarray], preds: Sequence[np.ndarray]) -> np.ndarray:
    cost = np.zeros((len(refs), len(preds)))
    for i, r in enumerate(refs):
        for j, p in enumerate(preds):
            cost[i, j] = angular_distance(r, p)
    return cost


@dataclass
class FrameMatch:
    """Resultado de un frame: contadores por clase y distancias de los pares."""

    tp: Dict[int, int] = field(default_factory=dict)
    fp: Dict[int, int] = field(default_factory=dict)
    fn: Dict[int, int] = field(default_factory=dict)
    pairs: Dict[int, List[float]] = field(default_factory=dict)
    refs: Dict[int, int] = field(default_factory=dict)

    @property
    def total_fp(self) -> int:
        return sum(self.fp.values())

    @property
    def total_fn(self) -> int:
        return sum(self.fn.values())

    @property
    def total_cost(self) -> float:
        return float(sum(sum(d) for d in self.pairs.values()))


def _group(events: Iterable[Event]) -> Dict[int, List[np.ndarray]]:
    out: Dict[int, List[np.ndarray]] = {}
    for cls, vec in events:
        out.setdefault(int(cls), []).append(np.asarray(vec, dtype=np.float64))
    return out


def match_frame(ref: Iterable[Event], pred: Iterable[Event], threshold_deg: float = DOA_THRESHOLD_DEG) -> FrameMatch:
    ref_by, pred_by = _group(ref), _group(pred)
    res = FrameMatch()
    for cls in sorted(set(ref_by) | set(pred_by)):
        r, p = ref_by.get(cls, []), pred_by.get(cls, [])
        res.refs[cls] = len(r)
        tp = fp = fn = 0
        dists: List[float] = []
        if r and p:
            cost = distance_matrix(r, p)
            rows, cols = linear_sum_assignment(cost)
            dists = [float(cost[i, j]) for i, j in zip(rows, cols)]
            tp = sum(d <= threshold_deg for d in dists)
            far = len(dists) - tp
            fp, fn = far, far
        fp += len(p) - len(dists)
        fn += len(r) - len(dists)
        res.tp[cls], res.fp[cls], res.fn[cls], res.pairs[cls] = tp, fp, fn, dists
    return res


@dataclass(frozen=True)
class MetricsReport:
    er20: float
    f20: float
    le_cd: float
    lr_cd: float
    e_seld: float
    per_class: Dict[int, Dict[str, float]] = field(default_factory=dict, compare=False)

    def as_row(self) -> Dict[str, float]:
        return {"er20": self.er20, "f20": self.f20, "le_cd": self.le_cd, "lr_cd": self.lr_cd, "e_seld": self.e_seld}


def e_seld(er: float, f: float, le_deg: float, lr: float) -> float:
    """(ER + (1 - F) + LE/180 + (1 - LR)) / 4."""
    if not 0.0 <= le_deg <= MAX_LE_DEG:
        raise MetricsError(f"LE fuera de [0, 180]: {le_deg}")
    if not (0.0 <= f <= 1.0 and 0.0 <= lr <= 1.0) or er < 0.0:
        raise MetricsError(f"métricas fuera de rango: ER={er} F={f} LR={lr}")
    return (er + (1.0 - f) + le_deg / MAX_LE_DEG + (1.0 - lr)) / 4.0


@dataclass
class SeldAccumulator:
    """Contadores sumables; ``merge`` es asociativo y conmutativo."""

    n_classes: int = N_CLASSES
    threshold_deg: float = DOA_THRESHOLD_DEG
    tp: Optional[np.ndarray] = None
    fp: Optional[np.ndarray] = None
    fn: Optional[np.ndarray] = None
    le_sum: Optional[np.ndarray] = None
    matched: Optional[np.ndarray] = None
    ref_count: Optional[np.ndarray] = None
    substitutions: int = 0
    deletions: int = 0
    insertions: int = 0
    n_ref: int = 0
    frames: int = 0

    def __post_init__(self):
        for name, dtype in (
            ("tp", int), ("fp", int), ("fn", int), ("le_sum", float), ("matched", int), ("ref_count", int),
        ):
            if getattr(self, name) is None:
                setattr(self, name, np.zeros(self.n_classes, dtype=dtype))

    def add_frame(self, ref: Iterable[Event], pred: Iterable[Event]) -> FrameMatch:
        m = match_frame(ref, pred, self.threshold_deg)
        for cls in m.refs:
            if not 0 <= cls < self.n_classes:
                raise MetricsError(f"clase fuera de rango: {cls}")
            self.tp[cls] += m.tp[cls]
            self.fp[cls] += m.fp[cls]
            self.fn[cls] += m.fn[cls]
            self.le_sum[cls] += sum(m.pairs[cls])
            self.matched[cls] += len(m.pairs[cls])
            self.ref_count[cls] += m.refs[cls]
        fn, fp = m.total_fn, m.total_fp
        self.substitutions += min(fn, fp)
        self.deletions += max(0, fn - fp)
        self.insertions += max(0, fp - fn)
        self.n_ref += sum(m.refs.values())
        self.frames += 1
        return m

    def add_annotations(self, ref: Annotation, pred: Annotation) -> "SeldAccumulator":
        """Acumula dos anotaciones alineadas frame a frame."""
        ref_by, pred_by = ref.by_frame(), pred.by_frame()
        for frame in sorted(set(ref_by) | set(pred_by)):
            self.add_frame(_events(ref_by.get(frame, ())), _events(pred_by.get(frame, ())))
        return self

    def merge(self, other: "SeldAccumulator") -> "SeldAccumulator":
        if other.n_classes != self.n_classes or other.threshold_deg != self.threshold_deg:
            raise MetricsError("acumuladores incompatibles")
        return SeldAccumulator(
            n_classes=self.n_classes,
            threshold_deg=self.threshold_deg,
            tp=self.tp + other.tp,
            fp=self.fp + other.fp,
            fn=self.fn + other.fn,
            le_sum=self.le_sum + other.le_sum,
            matched=self.matched + other.matched,
            ref_count=self.ref_count + other.ref_count,
            substitutions=self.substitutions + other.substitutions,
            deletions=self.deletions + other.deletions,
            insertions=self.insertions + other.insertions,
            n_ref=self.n_ref + other.n_ref,
            frames=self.frames + other.frames,
        )

    def finalize(self) -> MetricsReport:
        if self.n_ref == 0:
            raise MetricsError("no reference events")
        er = (self.substitutions + self.deletions + self.insertions) / self.n_ref
        per_class: Dict[int, Dict[str, float]] = {}
        for cls in np.flatnonzero(self.ref_count > 0):
            cls = int(cls)
            denom = 2 * self.tp[cls] + self.fp[cls] + self.fn[cls]
            per_class[cls] = {
                "f20": float(2 * self.tp[cls] / denom) if denom else 0.0,
                "le_cd": float(self.le_sum[cls] / self.matched[cls]) if self.matched[cls] else MAX_LE_DEG,
                "lr_cd": float(self.matched[cls] / self.ref_count[cls]),
                "tp": int(self.tp[cls]),
                "fp": int(self.fp[cls]),
                "fn": int(self.fn[cls]),
            }
        f = float(np.mean([c["f20"] for c in per_class.values()]))
        le = float(np.mean([c["le_cd"] for c in per_class.values()]))
        lr = float(np.mean([c["lr_cd"] for c in per_class.values()]))
        return MetricsReport(er20=er, f20=f, le_cd=le, lr_cd=lr, e_seld=e_seld(er, f, le, lr), per_class=per_class)


def merge_all(accumulators: Iterable[SeldAccumulator], n_classes: int = N_CLASSES) -> SeldAccumulator:
    total = SeldAccumulator(n_classes=n_classes)
    for acc in accumulators:
        total = total.merge(acc)
    return total


def _events(rows) -> List[Event]:
    return [(r.class_id, doa_unit_vector(r.azimuth, r.elevation)) for r in rows]


def evaluate_annotations(
    ref: Annotation, pred: Annotation, n_classes: int = N_CLASSES, acc: Optional[SeldAccumulator] = None
) -> MetricsReport:
    acc = acc or SeldAccumulator(n_classes=n_classes)
    return acc.add_annotations(ref, pred).finalize()
