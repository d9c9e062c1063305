from pathlib import Path

from django.conf import settings

from core.commands import LabCommand
from metalearn.services.config import CONDITIONS, RunConfig
from metalearn.services.runner import default_run_dir, run_condition
from metalearn.tasks import run_condition_task


class Command(LabCommand):
    """Ejecuta una condición de entrenamiento y evalúa las salas de test.

    pretrain: Θ pre-entrenado sin adaptar; finetune: Θ pre-entrenado + 5 pasos
    de SGD con los primeros segmentos de cada sala; meta: Θ meta-entrenado +
    la misma adaptación. La configuración efectiva se guarda en el directorio
    de la ejecución antes de empezar.
    """

    help = "Entrena y evalúa una condición (pretrain | finetune | meta)"

    def add_arguments(self, parser):
        parser.add_argument("dataset", help="Directorio del dataset (con manifest.csv y dataset_hash.txt)")
        parser.add_argument("--condition", choices=CONDITIONS, default=None, help="Por defecto [run] condition")
        parser.add_argument("--features", default=None, help="Caché de características (por defecto <dataset>/features)")
        parser.add_argument("--out", default=None, help="Directorio de la ejecución")
        self.add_config_argument(parser)
        parser.add_argument("--seed", type=int, default=None, help="Semilla raíz (por defecto [run] seed)")
        parser.add_argument("--pretrained", default=None, help="Checkpoint o ejecución pretrain para finetune")
        parser.add_argument("--workers", type=int, default=None, help="Procesos para evaluar salas de test")
        parser.add_argument("--serial", action="store_true", help="Fuerza un solo proceso")
        parser.add_argument("--queue", action="store_true", help="Encola la ejecución en Celery y termina")

    def run(self, **opts):
        sections = self.load_config(
            opts,
            {
                "run": {
                    "condition": opts["condition"],
                    "seed": opts["seed"],
                    "pretrained_checkpoint": opts["pretrained"],
                }
            },
        )
        condition = str(sections["run"]["condition"])
        seed = int(sections["run"]["seed"])
        out = Path(opts["out"]) if opts["out"] else default_run_dir(settings.WORK_DIR, condition, seed)

        if opts["queue"]:
            result = run_condition_task.delay(
                opts["dataset"], str(out), condition, seed, opts["config"], opts["features"], opts["pretrained"]
            )
            self.stdout.write(self.style.SUCCESS(f"Ejecución {condition} encolada (tarea {result.id}) -> {out}"))
            return

        cfg = RunConfig.from_sections(
            sections,
            Path(opts["dataset"]),
            out,
            Path(opts["features"]) if opts["features"] else None,
            workers=self.resolve_workers(opts, sections),
        )
        res = run_condition(cfg)
        self.stdout.write(self.style.SUCCESS(res.resumen))
