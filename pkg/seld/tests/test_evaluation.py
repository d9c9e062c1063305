# seld/tests/test_evaluation.py
import tempfile
from io import StringIO
from pathlib import Path

import pandas as pd
import pytest
from django.core.management import call_command
from django.core.management.base import CommandError
from django.test import SimpleTestCase

from core.annotations import Annotation, write_annotation_csv
from core.exceptions import DatasetError
from seld.services.evaluation import (
    METRIC_COLUMNS,
    OVERALL,
    evaluate_tree,
    read_metrics_csv,
    write_metrics_csv,
)
from seld.services.targets import write_prediction_csv

from .conftest import block_annotation

CLIP_A = "fold1_rooma_clip00"
CLIP_B = "fold1_roomb_clip00"


def _tree(root: Path):
    """Dos salas de un clip cada una; la sala b tiene el doble de referencias."""
    pd.DataFrame(
        {"clip_id": [CLIP_A, CLIP_B], "room_id": ["rooma", "roomb"], "split": ["test", "test"]}
    ).to_csv(root / "manifest.csv", index=False)
    refs = root / "metadata"
    ann_a = block_annotation([(0, 100, 1, 0, 40, 0)])
    ann_b = block_annotation([(0, 100, 2, 0, -90, 10), (0, 100, 5, 0, 0, 30)])
    write_annotation_csv(refs / f"{CLIP_A}.csv", ann_a)
    write_annotation_csv(refs / f"{CLIP_B}.csv", ann_b)
    preds = root / "preds"
    preds.mkdir()
    return refs, preds, ann_a, ann_b


def test_predicciones_perfectas_por_clip(tmp_path):
    refs, preds, ann_a, ann_b = _tree(tmp_path)
    write_prediction_csv(preds / f"{CLIP_A}.csv", ann_a)
    write_prediction_csv(preds / f"{CLIP_B}.csv", ann_b)
    res = evaluate_tree(refs, preds, tmp_path / "manifest.csv")
    assert list(res.reports) == ["rooma", "roomb", OVERALL]
    for rep in res.reports.values():
        assert rep.er20 == 0.0 and rep.f20 == 1.0 and rep.lr_cd == 1.0
    assert res.archivos == 2


def test_overall_agrega_contadores(tmp_path):
    refs, preds, ann_a, _ = _tree(tmp_path)
    write_prediction_csv(preds / f"{CLIP_A}.csv", ann_a)
    write_prediction_csv(preds / f"{CLIP_B}.csv", Annotation())
    res = evaluate_tree(refs, preds, tmp_path / "manifest.csv")
    assert res.reports["rooma"].er20 == 0.0
    assert res.reports["roomb"].er20 == 1.0
    # 100 referencias en a y 200 en b: no es la media de salas
    assert res.overall.er20 == pytest.approx(200 / 300)
    assert res.overall.lr_cd == pytest.approx(1 / 3)


def test_prediccion_por_segmento(tmp_path):
    refs, preds, ann_a, _ = _tree(tmp_path)
    write_prediction_csv(preds / f"{CLIP_A}_seg01.csv", ann_a.window(50, 50))
    res = evaluate_tree(refs, preds, tmp_path / "manifest.csv")
    assert list(res.reports) == ["rooma", OVERALL]
    assert res.reports["rooma"].er20 == 0.0
    assert res.accumulators["rooma"].n_ref == 50


def test_filtro_de_salas_y_ficheros_desconocidos(tmp_path):
    refs, preds, ann_a, ann_b = _tree(tmp_path)
    write_prediction_csv(preds / f"{CLIP_A}.csv", ann_a)
    write_prediction_csv(preds / f"{CLIP_B}.csv", ann_b)
    write_prediction_csv(preds / "otro_clip.csv", ann_b)
    res = evaluate_tree(refs, preds, tmp_path / "manifest.csv", rooms=["roomb"])
    assert list(res.reports) == ["roomb", OVERALL]
    assert res.archivos == 1


def test_referencia_ausente(tmp_path):
    refs, preds, ann_a, _ = _tree(tmp_path)
    (refs / f"{CLIP_A}.csv").unlink()
    write_prediction_csv(preds / f"{CLIP_A}.csv", ann_a)
    with pytest.raises(DatasetError):
        evaluate_tree(refs, preds, tmp_path / "manifest.csv")


def test_sala_sin_referencias_es_error_de_datos(tmp_path):
    refs, preds, ann_a, _ = _tree(tmp_path)
    write_annotation_csv(refs / f"{CLIP_A}.csv", Annotation())
    write_prediction_csv(preds / f"{CLIP_A}.csv", ann_a)
    with pytest.raises(DatasetError, match="rooma"):
        evaluate_tree(refs, preds, tmp_path / "manifest.csv")


def test_csv_de_metricas(tmp_path):
    refs, preds, ann_a, _ = _tree(tmp_path)
    write_prediction_csv(preds / f"{CLIP_A}.csv", ann_a.window(0, 60))
    write_prediction_csv(preds / f"{CLIP_B}.csv", Annotation())
    res = evaluate_tree(refs, preds, tmp_path / "manifest.csv")
    df = read_metrics_csv(write_metrics_csv(tmp_path / "metrics.csv", res.reports))
    assert list(df.columns) == ["room"] + METRIC_COLUMNS
    assert list(df["room"]) == ["rooma", "roomb", OVERALL]
    for room, row in df.set_index("room").iterrows():
        assert row.to_dict() == res.reports[room].as_row()


def test_csv_de_metricas_incompleto(tmp_path):
    path = tmp_path / "metrics.csv"
    path.write_text("room,er20\nrooma,0.5\n", encoding="utf-8")
    with pytest.raises(DatasetError):
        read_metrics_csv(path)


class EvaluateCommandTests(SimpleTestCase):
    def test_comando_escribe_metricas_junto_a_predicciones(self):
        with tempfile.TemporaryDirectory() as tmp:
            root = Path(tmp)
            refs, preds, ann_a, ann_b = _tree(root)
            write_prediction_csv(preds / f"{CLIP_A}.csv", ann_a)
            write_prediction_csv(preds / f"{CLIP_B}.csv", ann_b)
            out = StringIO()
            call_command("evaluate", str(refs), str(preds), stdout=out)
            df = pd.read_csv(root / "metrics.csv")
            self.assertEqual(list(df["room"]), ["rooma", "roomb", OVERALL])
            self.assertIn("E_SELD", out.getvalue())

    def test_comando_sin_predicciones_avisa(self):
        with tempfile.TemporaryDirectory() as tmp:
            root = Path(tmp)
            refs, preds, _, _ = _tree(root)
            out = StringIO()
            call_command("evaluate", str(refs), str(preds), stdout=out)
            self.assertIn("No hay predicciones", out.getvalue())
            self.assertFalse((root / "metrics.csv").exists())

    def test_comando_directorio_inexistente_sale_con_codigo_3(self):
        with tempfile.TemporaryDirectory() as tmp:
            root = Path(tmp)
            refs, _, _, _ = _tree(root)
            with self.assertRaises(CommandError) as ctx:
                call_command("evaluate", str(refs), str(root / "nada"))
            self.assertEqual(ctx.exception.returncode, 3)
