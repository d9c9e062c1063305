# metalearn/services/config.py
"""Configuración tipada del meta-aprendizaje, del pre-entrenamiento y de una ejecución.

Se construye a partir de las secciones ya mezcladas por ``core.config`` y
valida aquí las invariantes que cruzan claves (K + Q = muestras por sala).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping, Optional, Tuple

from core.config import default_sections, load_sections, write_sections
from core.exceptions import ConfigError
from seld.services.model import CrnnConfig

CONDITIONS = ("pretrain", "finetune", "meta")


@dataclass(frozen=True)
class MetaConfig:
    rooms_per_batch: int = 4
    samples_per_room: int = 64
    k_support: int = 30
    q_query: int = 34
    inner_lr: float = 0.01
    inner_steps: int = 5
    meta_lr: float = 0.001
    epochs: int = 150
    lr_constant_epochs: int = 100
    lr_decay_every: int = 20
    lr_decay_factor: float = 0.9
    meta_steps_per_epoch: int = 0
    second_order: bool = False
    weight_decay: float = 0.01
    betas: Tuple[float, float] = (0.9, 0.999)
    eps: float = 1e-8

    def __post_init__(self):
        if self.k_support + self.q_query != self.samples_per_room:
            raise ConfigError(
                f"k_support + q_query ({self.k_support} + {self.q_query}) != samples_per_room ({self.samples_per_room})"
            )
        if self.k_support < 1 or self.q_query < 1 or self.rooms_per_batch < 1:
            raise ConfigError("k_support, q_query y rooms_per_batch deben ser >= 1")
        if self.inner_lr <= 0 or self.meta_lr <= 0:
            raise ConfigError(f"tasas no positivas: inner_lr={self.inner_lr} meta_lr={self.meta_lr}")
        if self.inner_steps < 0 or self.epochs < 0 or self.meta_steps_per_epoch < 0:
            raise ConfigError("inner_steps, epochs y meta_steps_per_epoch no pueden ser negativos")
        if self.lr_decay_every < 1 or not 0 < self.lr_decay_factor <= 1:
            raise ConfigError("programa de meta_lr inválido")

    @classmethod
    def from_sections(cls, sections: Mapping) -> "MetaConfig":
        m = sections["meta"]
        return cls(
            rooms_per_batch=int(m["rooms_per_batch"]),
            samples_per_room=int(m["samples_per_room"]),
            k_support=int(m["k_support"]),
            q_query=int(m["q_query"]),
            inner_lr=float(m["inner_lr"]),
            inner_steps=int(m["inner_steps"]),
            meta_lr=float(m["meta_lr"]),
            epochs=int(m["epochs"]),
            lr_constant_epochs=int(m["lr_constant_epochs"]),
            lr_decay_every=int(m["lr_decay_every"]),
            lr_decay_factor=float(m["lr_decay_factor"]),
            meta_steps_per_epoch=int(m["meta_steps_per_epoch"]),
            second_order=bool(m["second_order"]),
            weight_decay=float(m["weight_decay"]),
        )

    def meta_lr_at(self, epoch: int) -> float:
        """Constante las primeras épocas; después ×factor cada ``lr_decay_every``."""
        if epoch < self.lr_constant_epochs:
            return self.meta_lr
        drops = 1 + (epoch - self.lr_constant_epochs) // self.lr_decay_every
        return self.meta_lr * self.lr_decay_factor ** drops

    def steps_per_epoch(self, n_train_segments: int) -> int:
        if self.meta_steps_per_epoch:
            return self.meta_steps_per_epoch
        return max(1, math.ceil(n_train_segments / (self.rooms_per_batch * self.samples_per_room)))


@dataclass(frozen=True)
class PretrainConfig:
    epochs: int = 90
    lr: float = 3e-4
    lr_drop_epoch: int = 70
    lr_after_drop: float = 3e-5
    batch_size: int = 32
    weight_decay: float = 0.01
    betas: Tuple[float, float] = (0.9, 0.999)
    eps: float = 1e-8

    def __post_init__(self):
        if self.lr <= 0 or self.lr_after_drop <= 0:
            raise ConfigError("tasas de pre-entrenamiento no positivas")
        if self.batch_size < 1 or self.epochs < 0:
            raise ConfigError(f"batch_size={self.batch_size} epochs={self.epochs} inválidos")

    @classmethod
    def from_sections(cls, sections: Mapping) -> "PretrainConfig":
        p = sections["pretrain"]
        return cls(
            epochs=int(p["epochs"]),
            lr=float(p["lr"]),
            lr_drop_epoch=int(p["lr_drop_epoch"]),
            lr_after_drop=float(p["lr_after_drop"]),
            batch_size=int(p["batch_size"]),
            weight_decay=float(p["weight_decay"]),
        )

    def lr_at(self, epoch: int) -> float:
        return self.lr if epoch < self.lr_drop_epoch else self.lr_after_drop


@dataclass(frozen=True)
class RunConfig:
    """Todo lo necesario para reproducir una ejecución desde (config, semilla, dataset)."""

    condition: str
    seed: int
    dataset_dir: Path
    cache_dir: Path
    out_dir: Path
    meta: MetaConfig = MetaConfig()
    pretrain: PretrainConfig = PretrainConfig()
    model: CrnnConfig = CrnnConfig()
    segment_seconds: float = 5.0
    act_threshold: float = 0.5
    checkpoint_every: int = 10
    workers: int = 1
    pretrained_checkpoint: Optional[Path] = None
    sections: Mapping = field(default_factory=dict, compare=False, repr=False)

    def __post_init__(self):
        if self.condition not in CONDITIONS:
            raise ConfigError(f"condición desconocida '{self.condition}' (válidas: {', '.join(CONDITIONS)})")
        if not 0.0 < self.act_threshold < 1.0:
            raise ConfigError(f"act_threshold fuera de (0, 1): {self.act_threshold}")
        if self.checkpoint_every < 1:
            raise ConfigError("checkpoint_every debe ser >= 1")

    @classmethod
    def from_sections(
        cls,
        sections: Mapping,
        dataset_dir: Path,
        out_dir: Path,
        cache_dir: Optional[Path] = None,
        workers: Optional[int] = None,
    ) -> "RunConfig":
        run = sections["run"]
        if workers is None:
            workers = 1 if run["serial"] else int(run["workers"])
        pretrained = str(run["pretrained_checkpoint"]).strip()
        dataset_dir = Path(dataset_dir)
        return cls(
            condition=str(run["condition"]),
            seed=int(run["seed"]),
            dataset_dir=dataset_dir,
            cache_dir=Path(cache_dir) if cache_dir else dataset_dir / "features",
            out_dir=Path(out_dir),
            meta=MetaConfig.from_sections(sections),
            pretrain=PretrainConfig.from_sections(sections),
            model=CrnnConfig.from_sections(sections),
            segment_seconds=float(sections["data"]["segment_seconds"]),
            act_threshold=float(sections["model"]["act_threshold"]),
            checkpoint_every=int(run["checkpoint_every"]),
            workers=max(1, int(workers)),
            pretrained_checkpoint=Path(pretrained) if pretrained else None,
            sections=sections,
        )

    def to_sections(self) -> dict:
        """Secciones INI con todos los campos efectivos, incluidas las rutas."""
        sections = default_sections()
        for name, values in self.sections.items():
            sections.setdefault(name, {}).update(values)
        sections["data"]["segment_seconds"] = self.segment_seconds
        sections["model"].update(
            conv_channels=",".join(str(c) for c in self.model.conv_channels),
            pool_sizes=",".join(f"{kt}x{kf}" for kt, kf in self.model.pool_sizes),
            gru_hidden=self.model.gru_hidden,
            n_classes=self.model.n_classes,
            act_threshold=self.act_threshold,
        )
        sections["meta"].update({key: getattr(self.meta, key) for key in sections["meta"]})
        sections["pretrain"].update({key: getattr(self.pretrain, key) for key in sections["pretrain"]})
        sections["run"].update(
            condition=self.condition,
            seed=self.seed,
            checkpoint_every=self.checkpoint_every,
            workers=self.workers,
            serial=self.workers == 1,
            pretrained_checkpoint=str(self.pretrained_checkpoint or ""),
        )
        sections["paths"].update(
            dataset_dir=str(self.dataset_dir), cache_dir=str(self.cache_dir), out_dir=str(self.out_dir)
        )
        return sections

    def write(self, run_dir: Path) -> Path:
        """Instantánea ``config.ini`` con la configuración efectiva de la ejecución."""
        return write_sections(self.to_sections(), Path(run_dir) / "config.ini")

    @classmethod
    def read(cls, run_dir: Path) -> "RunConfig":
        """Reconstruye la configuración de una ejecución desde su ``config.ini``."""
        path = Path(run_dir) / "config.ini"
        sections = load_sections(path)
        paths = sections["paths"]
        if not paths["dataset_dir"] or not paths["out_dir"]:
            raise ConfigError(f"{path}: faltan las rutas de [paths]")
        return cls.from_sections(
            sections,
            Path(paths["dataset_dir"]),
            Path(paths["out_dir"]),
            Path(paths["cache_dir"]) if paths["cache_dir"] else None,
        )
