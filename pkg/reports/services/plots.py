# reports/services/plots.py
"""Curvas de entrenamiento (pérdida por época) en PNG."""

from __future__ import annotations

import logging
from pathlib import Path
from typing import Optional, Sequence

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import pandas as pd  # noqa: E402

from .tables import RunSummary  # noqa: E402

logger = logging.getLogger(__name__)

LOSS_COLUMNS = ("meta_loss", "loss")


def plot_training_curves(runs: Sequence[RunSummary], path: Path) -> Optional[Path]:
    """Una línea por ejecución con ``train_log.csv``; ``None`` si ninguna lo tiene."""
    fig, ax = plt.subplots(figsize=(7, 4))
    drawn = 0
    try:
        for run in runs:
            log_path = run.run_dir / "train_log.csv"
            if not log_path.exists():
                logger.info("%s sin train_log.csv", run.run_dir)
                continue
            log = pd.read_csv(log_path)
            column = next((c for c in LOSS_COLUMNS if c in log.columns), None)
            if column is None or log.empty:
                continue
            ax.plot(log["epoch"], log[column], label=run.label)
            drawn += 1
        if not drawn:
            return None
        ax.set_xlabel("época")
        ax.set_ylabel("pérdida")
        ax.set_yscale("log")
        ax.legend()
        ax.grid(True, alpha=0.3)
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        fig.savefig(path, dpi=120, bbox_inches="tight")
        return path
    finally:
        plt.close(fig)
