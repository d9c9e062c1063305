from pathlib import Path

from celery import shared_task

from core.config import load_sections

from .services.config import RunConfig
from .services.runner import run_condition


@shared_task
def run_condition_task(
    dataset: str,
    out: str,
    condition: str = "meta",
    seed: int | None = None,
    config: str | None = None,
    features: str | None = None,
    pretrained: str | None = None,
):
    """Tarea de Celery que ejecuta una condición completa en un worker."""
    sections = load_sections(
        Path(config) if config else None,
        {"run": {"condition": condition, "seed": seed, "pretrained_checkpoint": pretrained}},
    )
    cfg = RunConfig.from_sections(sections, Path(dataset), Path(out), Path(features) if features else None)
    return run_condition(cfg).resumen
