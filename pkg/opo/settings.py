"""
Django settings for the opo project.

The project hosts a single app, ``cascade``, which simulates and analyses the
five-mode resonant cascaded optical parametric oscillator. There is no HTTP
surface: Django provides configuration, the management-command CLI, the ORM
for run manifests and the test runner.

For the full list of Django settings and their values, see
https://docs.djangoproject.com/en/6.0/ref/settings/
"""

import os
from pathlib import Path

# Build paths inside the project like this: BASE_DIR / 'subdir'.
BASE_DIR = Path(__file__).resolve().parent.parent

# Batch tool only; nothing is signed with this key.
SECRET_KEY = os.environ.get("SECRET_KEY", "opo-batch-insecure-key")

DEBUG = bool(int(os.environ.get("DEBUG", default=0)))

ALLOWED_HOSTS = []


# Application definition

INSTALLED_APPS = [
    'django.contrib.contenttypes',
    'rest_framework',
    'cascade.apps.CascadeConfig',
]


# Database
# Run manifests are stored here; SQLite unless the POSTGRES_* variables say otherwise.

DATABASES = {
    "default": {
        "ENGINE": os.environ.get("POSTGRES_ENGINE", "django.db.backends.sqlite3"),
        "NAME": os.environ.get("POSTGRES_DB", BASE_DIR / "db.sqlite3"),
        "USER": os.environ.get("POSTGRES_USER", "user"),
        "PASSWORD": os.environ.get("POSTGRES_PASSWORD", "password"),
        "HOST": os.environ.get("POSTGRES_HOST", "localhost"),
        "PORT": os.environ.get("POSTGRES_PORT", "5432"),
    }
}

DEFAULT_AUTO_FIELD = 'django.db.models.BigAutoField'

LANGUAGE_CODE = 'en-us'

TIME_ZONE = 'UTC'

USE_I18N = False

USE_TZ = True


# Logging

OPO_LOG_LEVEL = os.environ.get("OPO_LOG_LEVEL", "INFO")

LOGGING = {
    "version": 1,
    "disable_existing_loggers": False,
    "formatters": {
        "verbose": {
            "format": "{asctime} {levelname} {name} {message}",
            "style": "{",
        },
    },
    "handlers": {
        "console": {
            "class": "logging.StreamHandler",
            "formatter": "verbose",
        },
    },
    "loggers": {
        "cascade": {
            "handlers": ["console"],
            "level": OPO_LOG_LEVEL,
            "propagate": False,
        },
    },
}


# Cascade OPO toolkit

# Where CSVs, plot scripts and manifest.jsonl go unless --out is given.
OPO_OUT_DIR = Path(os.environ.get("OPO_OUT_DIR", BASE_DIR / "runs"))

OPO_WORKERS = int(os.environ.get("OPO_WORKERS", os.cpu_count() or 1))

# Trajectories sharing one RNG stream. Changing it changes stochastic output.
OPO_ENSEMBLE_BLOCK = int(os.environ.get("OPO_ENSEMBLE_BLOCK", 256))

OPO_MARGINAL_TOLERANCE = 1e-9
OPO_STABILITY_TOLERANCE = 1e-12
OPO_ADIABATIC_RATIO_MIN = 5.0

# Both in units of gamma/chi.
OPO_DIVERGENCE_BOUND = 1e6
OPO_VACUUM_SEED = 1e-6

OPO_FOCK_DIMENSION_CAP = 4096
OPO_FOCK_SATURATION = 1e-4

OPO_RECORD_RUNS = bool(int(os.environ.get("OPO_RECORD_RUNS", 1)))


REST_FRAMEWORK = {
    # Serializers validate scenario files and render manifests; nothing is served.
    'DEFAULT_AUTHENTICATION_CLASSES': [],
    'DEFAULT_PERMISSION_CLASSES': [],
    'UNAUTHENTICATED_USER': None,
}
