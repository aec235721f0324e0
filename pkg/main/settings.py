"""
Django settings for the MAQA simulator project.

Every MAQA_* value can be overridden from the environment or a .env file.

For the full list of Django settings and their values, see
https://docs.djangoproject.com/en/5.2/ref/settings/
"""

from pathlib import Path
import os
from dotenv import load_dotenv

load_dotenv()

# Build paths inside the project like this: BASE_DIR / 'subdir'.
BASE_DIR = Path(__file__).resolve().parent.parent


# No request handling happens in this project; the key only satisfies Django.
SECRET_KEY = os.getenv(
    "DJANGO_SECRET_KEY",
    "django-insecure-maqa-local-only-7q1v0x3k9b2m8c5n4z6w",
)

DEBUG = os.getenv("DEBUG", "True") == "True"

ALLOWED_HOSTS = []


# Application definition

INSTALLED_APPS = [
    "django.contrib.contenttypes",
    "django.contrib.auth",
    "rest_framework",
    "maqa",
]


# Database
# https://docs.djangoproject.com/en/5.2/ref/settings/#databases

DATABASES = {
    "default": {
        "ENGINE": "django.db.backends.sqlite3",
        "NAME": BASE_DIR / "db.sqlite3",
    }
}


# Internationalization
# https://docs.djangoproject.com/en/5.2/topics/i18n/

LANGUAGE_CODE = "en-us"

TIME_ZONE = os.getenv("TIME_ZONE", "UTC")

USE_I18N = True

USE_TZ = True

# Default primary key field type
# https://docs.djangoproject.com/en/5.2/ref/settings/#default-auto-field

DEFAULT_AUTO_FIELD = "django.db.models.BigAutoField"


# Simulator and experiment runner

MAQA_SEED = int(os.getenv("MAQA_SEED", "42"))
MAQA_TOLERANCE = float(os.getenv("MAQA_TOLERANCE", "1e-9"))
MAQA_OUTPUT_DIR = Path(os.getenv("MAQA_OUTPUT_DIR", BASE_DIR / "reports"))
MAQA_MAX_QUBITS = int(os.getenv("MAQA_MAX_QUBITS", "20"))
MAQA_ORACLE_WORKERS = int(os.getenv("MAQA_ORACLE_WORKERS", "1"))
MAQA_RECORD_RUNS = os.getenv("MAQA_RECORD_RUNS", "True") == "True"
MAQA_LOG_LEVEL = os.getenv("MAQA_LOG_LEVEL", "INFO")


# Logging
# https://docs.djangoproject.com/en/5.2/topics/logging/

LOGGING = {
    "version": 1,
    "disable_existing_loggers": False,
    "formatters": {
        "verbose": {
            "format": "{asctime} {levelname} {name}: {message}",
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
        "maqa": {
            "handlers": ["console"],
            "level": MAQA_LOG_LEVEL,
            "propagate": False,
        },
    },
}
