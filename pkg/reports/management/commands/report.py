from pathlib import Path

from django.conf import settings

from core.commands import LabCommand
from reports.services.summary import build_report


class Command(LabCommand):
    """Reúne varias ejecuciones en una tabla por sala y condición.

    Escribe report.csv, report.xlsx (una hoja por métrica) y
    training_curves.png. Rechaza ejecuciones de datasets distintos.
    """

    help = "Tabla comparativa pretrain / finetune / meta y curvas de entrenamiento"

    def add_arguments(self, parser):
        parser.add_argument("runs", nargs="+", help="Directorios de ejecución (salida de run)")
        parser.add_argument(
            "--out",
            default=str(Path(settings.WORK_DIR) / "report"),
            help="Directorio de salida del informe",
        )

    def run(self, **opts):
        res = build_report([Path(p) for p in opts["runs"]], Path(opts["out"]))
        if res.curves_path is None:
            self.stdout.write(self.style.WARNING("Ninguna ejecución tiene train_log.csv; no se dibujan curvas"))
        if res.study is not None and res.study.ordering_holds is False:
            self.stdout.write(self.style.WARNING(f"Overall E_SELD fuera de orden: {res.study.overall}"))
        self.stdout.write(self.style.SUCCESS(res.resumen))
