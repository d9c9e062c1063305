"""Carga de configuración: valores por defecto de settings + fichero INI.

El fichero es de líneas ``clave = valor`` agrupadas en ``[secciones]``. Sólo
se aceptan secciones y claves que ya existen en ``settings.METASELD``; el tipo
de cada valor se toma del valor por defecto.
"""

from __future__ import annotations

import configparser
import copy
from pathlib import Path
from typing import Any, Dict, Mapping, Optional

from django.conf import settings

from .exceptions import ConfigError

Sections = Dict[str, Dict[str, Any]]

_TRUE = {"1", "true", "yes", "on", "si", "sí"}
_FALSE = {"0", "false", "no", "off"}


def _coerce(section: str, key: str, raw: str, default: Any) -> Any:
    txt = str(raw).strip()
    try:
        if isinstance(default, bool):
            low = txt.lower()
            if low in _TRUE:
                return True
            if low in _FALSE:
                return False
            raise ValueError(txt)
        if isinstance(default, int):
            return int(txt)
        if isinstance(default, float):
            return float(txt)
    except ValueError as exc:
        raise ConfigError(f"[{section}] {key}: valor inválido '{txt}'") from exc
    return txt


def default_sections() -> Sections:
    return copy.deepcopy(settings.METASELD)


def load_sections(
    path: Optional[Path] = None,
    overrides: Optional[Mapping[str, Mapping[str, Any]]] = None,
) -> Sections:
    """Mezcla defaults, fichero INI y overrides explícitos (en ese orden)."""
    sections = default_sections()

    if path is not None:
        path = Path(path)
        if not path.exists():
            raise ConfigError(f"Fichero de configuración no encontrado: {path}")
        parser = configparser.ConfigParser(interpolation=None)
        try:
            parser.read(path, encoding="utf-8")
        except configparser.Error as exc:
            raise ConfigError(f"{path}: {exc}") from exc
        for name in parser.sections():
            if name not in sections:
                raise ConfigError(f"{path}: sección desconocida [{name}]")
            for key, raw in parser.items(name):
                if key not in sections[name]:
                    raise ConfigError(f"{path}: clave desconocida [{name}] {key}")
                sections[name][key] = _coerce(name, key, raw, sections[name][key])

    for name, values in (overrides or {}).items():
        if name not in sections:
            raise ConfigError(f"sección desconocida [{name}]")
        for key, value in values.items():
            if key not in sections[name]:
                raise ConfigError(f"clave desconocida [{name}] {key}")
            if value is None:
                continue
            default = sections[name][key]
            sections[name][key] = value if not isinstance(value, str) else _coerce(name, key, value, default)

    return sections


def write_sections(sections: Mapping[str, Mapping[str, Any]], path: Path) -> Path:
    """Serializa la configuración efectiva en formato INI."""
    parser = configparser.ConfigParser(interpolation=None)
    for name, values in sections.items():
        parser[name] = {k: str(v) for k, v in values.items()}
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", encoding="utf-8") as fh:
        parser.write(fh)
    return path


def parse_int_list(raw: str) -> tuple:
    try:
        return tuple(int(p) for p in str(raw).split(",") if p.strip())
    except ValueError as exc:
        raise ConfigError(f"lista de enteros inválida: '{raw}'") from exc


def parse_pool_sizes(raw: str) -> tuple:
    """'2x2,2x2,1x2' -> ((2, 2), (2, 2), (1, 2)) en orden tiempo x frecuencia."""
    sizes = []
    for part in str(raw).split(","):
        part = part.strip().lower()
        if not part:
            continue
        try:
            kt, kf = part.split("x")
            sizes.append((int(kt), int(kf)))
        except ValueError as exc:
            raise ConfigError(f"tamaño de pooling inválido: '{part}'") from exc
    return tuple(sizes)
