from pathlib import Path

from core.commands import LabCommand
from seld.services.evaluation import evaluate_tree, write_metrics_csv


class Command(LabCommand):
    """Compara un árbol de predicciones con las anotaciones de referencia.

    Escribe un CSV con una fila por sala y una fila Overall
    (room, er20, f20, le_cd, lr_cd, e_seld).
    """

    help = "Evalúa predicciones SELD por sala (ER/F a 20°, LE/LR, E_SELD)"

    def add_arguments(self, parser):
        parser.add_argument("refs", help="Directorio de anotaciones de referencia (<clip_id>.csv)")
        parser.add_argument("preds", help="Directorio de predicciones (<clip_id>.csv o <clip_id>_segNN.csv)")
        parser.add_argument("--manifest", default=None, help="manifest.csv (por defecto <refs>/../manifest.csv)")
        parser.add_argument("--out", default=None, help="CSV de salida (por defecto <preds>/../metrics.csv)")
        parser.add_argument("--room", action="append", dest="rooms", help="Limita a estas salas (repetible)")
        self.add_config_argument(parser)

    def run(self, **opts):
        sections = self.load_config(opts)
        refs, preds = Path(opts["refs"]), Path(opts["preds"])
        manifest = Path(opts["manifest"]) if opts["manifest"] else refs.parent / "manifest.csv"
        out = Path(opts["out"]) if opts["out"] else preds.parent / "metrics.csv"
        res = evaluate_tree(
            refs,
            preds,
            manifest,
            rooms=opts["rooms"],
            segment_seconds=float(sections["data"]["segment_seconds"]),
            n_classes=int(sections["model"]["n_classes"]),
        )
        if not res.reports:
            self.stdout.write(self.style.WARNING("No hay predicciones que evaluar"))
            return
        write_metrics_csv(out, res.reports)
        self.stdout.write(self.style.SUCCESS(f"{res.resumen} -> {out}"))
