# reports/services/summary.py
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, Optional, Sequence

import pandas as pd

from metalearn.services.config import CONDITIONS
from seld.services.evaluation import OVERALL

from .plots import plot_training_curves
from .tables import build_table, condition_counts, read_run, write_table_csv, write_workbook

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class StudyCheck:
    """Comparación del estudio: orden de Overall E_SELD y salas donde meta mejora a finetune."""

    overall: Dict[str, float]
    rooms_won: int
    rooms_compared: int

    @property
    def ordering_holds(self) -> Optional[bool]:
        """meta <= finetune <= pretrain en Overall; None si falta alguna condición."""
        if any(cond not in self.overall for cond in CONDITIONS):
            return None
        return self.overall["meta"] <= self.overall["finetune"] <= self.overall["pretrain"]

    @property
    def resumen(self) -> str:
        parts = [f"meta mejora a finetune en {self.rooms_won}/{self.rooms_compared} salas"]
        if self.ordering_holds is not None:
            verdict = "se cumple" if self.ordering_holds else "NO se cumple"
            parts.insert(0, f"orden meta <= finetune <= pretrain {verdict}")
        return "; ".join(parts)


def check_study(table: pd.DataFrame) -> Optional[StudyCheck]:
    """Requiere columnas meta y finetune; sin ellas no hay nada que comparar."""
    if "meta.e_seld" not in table.columns or "finetune.e_seld" not in table.columns:
        return None
    overall = {}
    if OVERALL in table.index:
        for cond in CONDITIONS:
            value = table.loc[OVERALL].get(f"{cond}.e_seld")
            if value is not None and not pd.isna(value):
                overall[cond] = float(value)
    rooms = table.drop(index=OVERALL, errors="ignore")[["meta.e_seld", "finetune.e_seld"]].dropna()
    won = int((rooms["meta.e_seld"] < rooms["finetune.e_seld"]).sum())
    return StudyCheck(overall=overall, rooms_won=won, rooms_compared=len(rooms))


@dataclass
class ReportResult:
    out_dir: Path
    table: pd.DataFrame = field(repr=False)
    runs_per_condition: Dict[str, int] = field(default_factory=dict)
    csv_path: Optional[Path] = None
    xlsx_path: Optional[Path] = None
    curves_path: Optional[Path] = None
    study: Optional[StudyCheck] = None

    @property
    def resumen(self) -> str:
        parts = [f"{cond} x{n}" for cond, n in self.runs_per_condition.items()]
        text = f"Informe de {', '.join(parts)} -> {self.out_dir}"
        if OVERALL in self.table.index:
            overall = self.table.loc[OVERALL]
            scores = ", ".join(
                f"{col.split('.')[0]} {overall[col]:.3f}" for col in self.table.columns if col.endswith(".e_seld")
            )
            text = f"{text}; Overall E_SELD: {scores}"
        if self.study is not None:
            text = f"{text}; {self.study.resumen}"
        return text


def build_report(run_dirs: Sequence[Path], out_dir: Path) -> ReportResult:
    runs = [read_run(Path(d)) for d in run_dirs]
    table = build_table(runs)
    out_dir = Path(out_dir)
    res = ReportResult(out_dir, table, condition_counts(runs), study=check_study(table))
    res.csv_path = write_table_csv(table, out_dir / "report.csv")
    res.xlsx_path = write_workbook(table, out_dir / "report.xlsx")
    res.curves_path = plot_training_curves(runs, out_dir / "training_curves.png")
    logger.info(res.resumen)
    return res
