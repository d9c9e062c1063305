# reports/services/study.py
"""Estudio completo: un dataset, varias semillas y las tres condiciones.

Cada semilla ejecuta pretrain, después finetune desde los pesos de ese
pretrain, y meta. Todas las ejecuciones comparten dataset y caché, de modo
que el informe final puede promediarlas.
"""

from __future__ import annotations

import copy
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Mapping, Optional, Sequence

from core.datasets import read_dataset_hash
from core.exceptions import ConfigError
from features.services.extraction import extract_dataset_features
from features.services.spectral import FeatureParams
from metalearn.services.config import CONDITIONS, RunConfig
from metalearn.services.runner import default_run_dir, run_condition
from synth.services.dataset import build_dataset_from_sections

from .summary import ReportResult, build_report

logger = logging.getLogger(__name__)


@dataclass
class StudyResult:
    work_dir: Path
    dataset_hash: str
    run_dirs: List[Path] = field(default_factory=list)
    skipped: List[Path] = field(default_factory=list)
    report: Optional[ReportResult] = None

    @property
    def resumen(self) -> str:
        head = f"{len(self.run_dirs)} ejecuciones ({len(self.skipped)} reutilizadas) sobre {self.dataset_hash[:12]}"
        return f"{head}\n{self.report.resumen}" if self.report is not None else head


def study_seeds(base_seed: int, n_seeds: int) -> List[int]:
    if n_seeds < 1:
        raise ConfigError(f"el estudio necesita al menos una semilla (pedidas {n_seeds})")
    return [base_seed + i for i in range(n_seeds)]


def _run_sections(sections: Mapping[str, Mapping[str, Any]], condition: str, seed: int, pretrained: str) -> Dict:
    out = copy.deepcopy(dict(sections))
    out["run"].update(condition=condition, seed=seed, pretrained_checkpoint=pretrained)
    return out


def run_study(
    sections: Mapping[str, Mapping[str, Any]],
    work_dir: Path,
    seeds: Sequence[int],
    workers: int = 1,
    resume: bool = False,
) -> StudyResult:
    """Sintetiza (si falta), extrae y ejecuta semillas x condiciones; termina con el informe.

    Con ``resume`` se reutilizan las ejecuciones que ya tienen ``metrics.csv``.
    """
    work_dir = Path(work_dir)
    dataset_dir = work_dir / "dataset"
    if not (dataset_dir / "dataset_hash.txt").exists():
        build_dataset_from_sections(dataset_dir, sections, workers=workers)
    extract_dataset_features(
        dataset_dir,
        params=FeatureParams.from_sections(sections),
        segment_seconds=float(sections["data"]["segment_seconds"]),
        workers=workers,
    )
    res = StudyResult(work_dir, read_dataset_hash(dataset_dir))

    for seed in seeds:
        for condition in CONDITIONS:
            out = default_run_dir(work_dir, condition, seed)
            res.run_dirs.append(out)
            if resume and (out / "metrics.csv").exists():
                logger.info("Reutilizando %s", out)
                res.skipped.append(out)
                continue
            pretrained = str(default_run_dir(work_dir, "pretrain", seed)) if condition == "finetune" else ""
            cfg = RunConfig.from_sections(
                _run_sections(sections, condition, seed, pretrained), dataset_dir, out, workers=workers
            )
            logger.info("Estudio: %s con semilla %d", condition, seed)
            run_condition(cfg)

    res.report = build_report(res.run_dirs, work_dir / "report")
    logger.info(res.resumen)
    return res
