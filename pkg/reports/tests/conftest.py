# reports/tests/conftest.py
import pandas as pd
import pytest

from core.config import load_sections, write_sections
from seld.services.evaluation import OVERALL, write_metrics_csv
from seld.services.metrics import MetricsReport, e_seld

HASH = "ab" * 32


def report(er, f, le, lr):
    return MetricsReport(er20=er, f20=f, le_cd=le, lr_cd=lr, e_seld=e_seld(er, f, le, lr))


def make_run(root, name, condition, seed, rooms, dataset_hash=HASH, losses=(1.0, 0.5, 0.25)):
    """Directorio de ejecución mínimo: config.ini, dataset_hash.txt, metrics.csv y train_log.csv."""
    run_dir = root / name
    run_dir.mkdir(parents=True)
    write_sections(load_sections(overrides={"run": {"condition": condition, "seed": seed}}), run_dir / "config.ini")
    (run_dir / "dataset_hash.txt").write_text(dataset_hash + "\n", encoding="ascii")
    write_metrics_csv(run_dir / "metrics.csv", rooms)
    if losses:
        column = "meta_loss" if condition == "meta" else "loss"
        pd.DataFrame({"epoch": range(len(losses)), "lr": 0.001, column: losses}).to_csv(
            run_dir / "train_log.csv", index=False
        )
    return run_dir


@pytest.fixture
def three_runs(tmp_path):
    rooms = {
        "pretrain": {"test_room01": report(0.8, 0.2, 30.0, 0.5), "test_room02": report(0.6, 0.3, 20.0, 0.4),
                     OVERALL: report(0.707, 0.230, 22.8, 0.395)},
        "finetune": {"test_room01": report(0.7, 0.25, 25.0, 0.6), "test_room02": report(0.6, 0.3, 20.0, 0.5),
                     OVERALL: report(0.65, 0.27, 22.0, 0.55)},
        "meta": {"test_room01": report(0.6, 0.3, 20.0, 0.7), "test_room02": report(0.55, 0.35, 18.0, 0.6),
                 OVERALL: report(0.6, 0.3, 20.0, 0.65)},
    }
    return [make_run(tmp_path, cond, cond, 1, reps) for cond, reps in rooms.items()]
