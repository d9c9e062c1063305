from pathlib import Path

from django.conf import settings

from core.commands import LabCommand
from reports.services.study import run_study, study_seeds


class Command(LabCommand):
    """Estudio de sobremesa: dataset, características, semillas x condiciones e informe.

    Por defecto 3 semillas consecutivas desde [run] seed sobre las 9 salas de
    entrenamiento y 7 de test de la configuración. Todo queda bajo ``--work``:
    dataset/, runs/<condición>_seed<N>/ y report/.
    """

    help = "Ejecuta pretrain, finetune y meta para varias semillas y compara"

    def add_arguments(self, parser):
        parser.add_argument("--work", default=str(settings.WORK_DIR), help="Directorio de trabajo del estudio")
        self.add_config_argument(parser)
        parser.add_argument("--seeds", type=int, default=3, help="Número de semillas")
        parser.add_argument("--seed", type=int, default=None, help="Primera semilla (por defecto [run] seed)")
        parser.add_argument("--resume", action="store_true", help="Reutiliza ejecuciones con metrics.csv")
        parser.add_argument("--workers", type=int, default=None, help="Procesos en paralelo")
        parser.add_argument("--serial", action="store_true", help="Fuerza un solo proceso")

    def run(self, **opts):
        sections = self.load_config(opts, {"run": {"seed": opts["seed"]}})
        seeds = study_seeds(int(sections["run"]["seed"]), opts["seeds"])
        res = run_study(
            sections,
            Path(opts["work"]),
            seeds,
            workers=self.resolve_workers(opts, sections),
            resume=opts["resume"],
        )
        study = res.report.study
        if study is not None and study.ordering_holds is False:
            self.stdout.write(self.style.WARNING(f"Overall E_SELD fuera de orden: {study.overall}"))
        self.stdout.write(self.style.SUCCESS(res.resumen))
