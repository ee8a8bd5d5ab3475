from pathlib import Path
from os import getenv

from dotenv import find_dotenv, load_dotenv


load_dotenv(find_dotenv())

# Build paths inside the project like this: BASE_DIR / 'subdir'.
BASE_DIR = Path(__file__).resolve().parent.parent


# SECURITY WARNING: keep the secret key used in production secret!
SECRET_KEY = getenv("SECRET_KEY") or "planner-insecure-development-key"

# SECURITY WARNING: don't run with debug turned on in production!
DEBUG = getenv("DEBUG") or False

ALLOWED_HOSTS = ["*"]


# Application definition

INSTALLED_APPS = [
    # Django
    'django.contrib.contenttypes',
    # Apps
    "planner.apps.PlannerConfig",
]


# Database
# PostgreSQL when configured, a local SQLite file otherwise

if getenv("POSTGRES_DB"):
    DATABASES = {
        'default': {
            'ENGINE': "django.db.backends.postgresql",
            'NAME': getenv("POSTGRES_DB"),
            'HOST': getenv("POSTGRES_HOST"),
            'PORT': getenv("POSTGRES_PORT"),
            'PASSWORD': getenv("POSTGRES_PASSWORD"),
            'USER': getenv("POSTGRES_USER"),
        }
    }
else:
    DATABASES = {
        'default': {
            'ENGINE': "django.db.backends.sqlite3",
            'NAME': BASE_DIR / "planner.sqlite3",
        }
    }


# Internationalization

LANGUAGE_CODE = "en-us"

TIME_ZONE = "UTC"

USE_I18N = False

USE_TZ = True


# Default primary key field type

DEFAULT_AUTO_FIELD = 'django.db.models.BigAutoField'


# Planner

PLANNER_DATA_DIR = Path(getenv("FGS_DATA_DIR") or BASE_DIR / "data")

PLANNER_MAX_GROUND_ACTIONS = int(getenv("PLANNER_MAX_GROUND_ACTIONS", 100_000))

PLANNER_SCORE_LAMBDA1 = float(getenv("PLANNER_SCORE_LAMBDA1", 1.0))
PLANNER_SCORE_LAMBDA2 = float(getenv("PLANNER_SCORE_LAMBDA2", 1.0))
PLANNER_MATERIAL_THRESHOLD = float(getenv("PLANNER_MATERIAL_THRESHOLD", 0.6))

PLANNER_SEARCH_WEIGHT = float(getenv("PLANNER_SEARCH_WEIGHT", 5.0))

PLANNER_TRACE_DIR = Path(getenv("PLANNER_TRACE_DIR") or BASE_DIR / "traces")


# Logging

LOGGING = {
    "version": 1,
    "disable_existing_loggers": False,
    "formatters": {
        "plain": {
            "format": "%(asctime)s %(levelname)s %(name)s: %(message)s",
        },
    },
    "handlers": {
        "console": {
            "class": "logging.StreamHandler",
            "stream": "ext://sys.stderr",
            "formatter": "plain",
        },
    },
    "loggers": {
        "planner": {
            "handlers": ["console"],
            "level": getenv("PLANNER_LOG_LEVEL", "INFO"),
            "propagate": False,
        },
    },
}


# Celery broker (Redis)
CELERY_BROKER_URL = getenv("CELERY_BROKER_URL", 'redis://redis:6379/0')

CELERY_RESULT_BACKEND = getenv("CELERY_RESULT_BACKEND", 'redis://redis:6379/0')

CELERY_ACCEPT_CONTENT = ['json']
CELERY_TASK_SERIALIZER = 'json'
CELERY_RESULT_SERIALIZER = 'json'

CELERY_TASK_ALWAYS_EAGER = getenv("CELERY_TASK_ALWAYS_EAGER", "").lower() in ("1", "true", "yes")
