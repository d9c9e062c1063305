# core/commands.py
"""Base común de los comandos de ``manage.py`` del laboratorio."""

from __future__ import annotations

from pathlib import Path

from django.core.management.base import BaseCommand, CommandError

from .config import load_sections
from .exceptions import MetaSeldError


class LabCommand(BaseCommand):
    """Traduce los errores del dominio a ``CommandError`` con su código de salida.

    Las subclases implementan ``run(**opts)`` en lugar de ``handle``.
    """

    def add_config_argument(self, parser):
        parser.add_argument("--config", default=None, help="Fichero INI con [secciones] a sobrescribir")

    def load_config(self, opts, overrides=None):
        path = Path(opts["config"]) if opts.get("config") else None
        return load_sections(path, overrides)

    def handle(self, *args, **opts):
        try:
            return self.run(**opts)
        except MetaSeldError as exc:
            raise CommandError(str(exc), returncode=exc.exit_code) from exc

    def run(self, **opts):  # pragma: no cover
        raise NotImplementedError

    @staticmethod
    def resolve_workers(opts, sections) -> int:
        """``--serial`` gana; después ``--workers``; después [run] del INI."""
        if opts.get("serial"):
            return 1
        if opts.get("workers"):
            return max(1, int(opts["workers"]))
        if sections["run"]["serial"]:
            return 1
        return max(1, int(sections["run"]["workers"]))
