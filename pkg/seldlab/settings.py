"""
Django settings for the seldlab project.

El proyecto no expone interfaz web: Django aporta la configuración
(``django.conf.settings``), los comandos de ``manage.py`` y el registro de
aplicaciones. Todos los valores por defecto del laboratorio viven en
``METASELD`` y coinciden con los hiperparámetros publicados cuando existen.
"""

from pathlib import Path
import os

# Build paths inside the project like this: BASE_DIR / 'subdir'.
BASE_DIR = Path(__file__).resolve().parent.parent

# SECURITY WARNING: keep the secret key used in production secret!
SECRET_KEY = os.environ.get("DJANGO_SECRET_KEY", "django-insecure-seldlab-local-only")

DEBUG = os.environ.get("DJANGO_DEBUG", "0") == "1"

ALLOWED_HOSTS = []


# Application definition

INSTALLED_APPS = [
    'core.apps.CoreConfig',
    'autodiff.apps.AutodiffConfig',
    'features.apps.FeaturesConfig',
    'synth.apps.SynthConfig',
    'seld.apps.SeldConfig',
    'metalearn.apps.MetalearnConfig',
    'reports.apps.ReportsConfig',
]

# Sin base de datos: los artefactos del laboratorio son ficheros (WAV, CSV,
# cachés binarias y directorios de ejecución).
DATABASES = {}

LANGUAGE_CODE = 'en-us'

TIME_ZONE = 'UTC'

USE_I18N = False

USE_TZ = True

DEFAULT_AUTO_FIELD = 'django.db.models.BigAutoField'


# Directorio de trabajo por defecto para datasets, cachés y ejecuciones
WORK_DIR = Path(os.environ.get("METASELD_WORK_DIR", BASE_DIR / "work"))


# Logging
LOG_LEVEL = os.environ.get("METASELD_LOG_LEVEL", "INFO")

LOGGING = {
    "version": 1,
    "disable_existing_loggers": False,
    "formatters": {
        "verbose": {
            "format": "%(asctime)s %(levelname)s %(name)s: %(message)s",
        },
    },
    "handlers": {
        "console": {
            "class": "logging.StreamHandler",
            "formatter": "verbose",
        },
    },
    "loggers": {
        app: {"handlers": ["console"], "level": LOG_LEVEL, "propagate": False}
        for app in ("core", "features", "synth", "autodiff", "seld", "metalearn", "reports")
    },
}

# Activa el chequeo de valores no finitos en cada operación del autodiff
METASELD_DEBUG_FINITE = os.environ.get("METASELD_DEBUG_FINITE", "0") == "1"


# Valores por defecto del laboratorio. Un fichero ``--config`` (formato INI,
# ``clave = valor`` por secciones) sobrescribe cualquiera de ellos.
METASELD = {
    "data": {
        "sample_rate": 24000,
        "clip_seconds": 60.0,
        "segment_seconds": 5.0,
        "clips_per_room": 20,
        "min_events_per_clip": 4,
        "max_events_per_clip": 12,
        "max_polyphony": 3,
        "train_rooms": 9,
        "test_rooms": 7,
        "wav_subtype": "PCM_16",
    },
    "features": {
        "window_len": 1024,
        "hop": 320,
        "n_mels": 64,
        "fmin": 50.0,
        "fmax": 12000.0,
    },
    "model": {
        "conv_channels": "32,64,128,256",
        "pool_sizes": "2x2,2x2,2x2,1x2",
        "gru_hidden": 128,
        "n_classes": 13,
        "act_threshold": 0.5,
    },
    "meta": {
        "rooms_per_batch": 4,
        "samples_per_room": 64,
        "k_support": 30,
        "q_query": 34,
        "inner_lr": 0.01,
        "inner_steps": 5,
        "meta_lr": 0.001,
        "epochs": 150,
        "lr_constant_epochs": 100,
        "lr_decay_every": 20,
        "lr_decay_factor": 0.9,
        "meta_steps_per_epoch": 0,
        "second_order": False,
        "weight_decay": 0.01,
    },
    "pretrain": {
        "epochs": 90,
        "lr": 0.0003,
        "lr_drop_epoch": 70,
        "lr_after_drop": 0.00003,
        "batch_size": 32,
        "weight_decay": 0.01,
    },
    "run": {
        "seed": 2023,
        "condition": "meta",
        "checkpoint_every": 10,
        "workers": 1,
        "serial": True,
        "pretrained_checkpoint": "",
    },
    "paths": {
        "dataset_dir": "",
        "cache_dir": "",
        "out_dir": "",
    },
}


# Configuración de Celery (ejecuciones largas encoladas en un worker)
CELERY_BROKER_URL = os.environ.get("CELERY_BROKER_URL", "redis://localhost:6379/0")
CELERY_RESULT_BACKEND = os.environ.get("CELERY_RESULT_BACKEND", CELERY_BROKER_URL)
CELERY_TASK_ALWAYS_EAGER = os.environ.get("CELERY_TASK_ALWAYS_EAGER", "0") == "1"
