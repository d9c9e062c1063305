from pathlib import Path

from core.commands import LabCommand
from features.services.extraction import extract_dataset_features
from features.services.spectral import FeatureParams


class Command(LabCommand):
    """Calcula las características de cada segmento de 5 s de un dataset.

    Los clips ya extraídos (mismo hash de WAV, mismos parámetros y ficheros
    presentes) se omiten.
    """

    help = "Extrae log-mel + intensidad FOA a la caché MSLD"

    def add_arguments(self, parser):
        parser.add_argument("dataset", help="Directorio del dataset (con manifest.csv)")
        parser.add_argument("--out", default=None, help="Directorio de la caché (por defecto <dataset>/features)")
        self.add_config_argument(parser)
        parser.add_argument("--workers", type=int, default=None, help="Procesos en paralelo")
        parser.add_argument("--serial", action="store_true", help="Fuerza un solo proceso")

    def run(self, **opts):
        sections = self.load_config(opts)
        workers = self.resolve_workers(opts, sections)
        res = extract_dataset_features(
            Path(opts["dataset"]),
            Path(opts["out"]) if opts["out"] else None,
            params=FeatureParams.from_sections(sections),
            segment_seconds=float(sections["data"]["segment_seconds"]),
            workers=workers,
        )
        self.stdout.write(self.style.SUCCESS(res.resumen))
