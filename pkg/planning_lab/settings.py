import os
from pathlib import Path

import environ
from django.urls import reverse_lazy

env = environ.Env()

# Build paths inside the project like this: BASE_DIR / 'subdir'.
BASE_DIR = Path(__file__).resolve().parent.parent

# Load environment variables from dev.env when present
if (BASE_DIR / "dev.env").exists():
    environ.Env.read_env(os.path.join(BASE_DIR, "dev.env"))
IS_DEV = env("ENVIRONMENT", default="DEV") == "DEV"

LOG_LEVEL = env("LOG_LEVEL", default=os.environ.get("LOG_LEVEL", "INFO")).upper()
LOG_DIR = Path(env("LOG_DIR", default=str(BASE_DIR / "logs")))
LOG_DIR.mkdir(parents=True, exist_ok=True)

# SECURITY WARNING: keep the secret key used in production secret!
SECRET_KEY = env("SECRET_KEY", default="planning-lab-dev-only-secret")
DEBUG = env.bool("ENABLE_DEBUG", default=IS_DEV)

ALLOWED_HOSTS = ["localhost", "127.0.0.1"]
if not IS_DEV:
    ALLOWED_HOSTS.extend(env.list("ALLOW_HOSTS", default=[]))

# Application definition
INSTALLED_APPS = [
    "unfold",
    "django.contrib.admin",
    "django.contrib.auth",
    "django.contrib.contenttypes",
    "django.contrib.sessions",
    "django.contrib.messages",
    "django.contrib.staticfiles",
    "posg",
    "nested",
    "lite",
    "baselines",
    "environments",
    "arena",
    "verify",
    "experiments",
]

MIDDLEWARE = [
    "django.middleware.security.SecurityMiddleware",
    "django.contrib.sessions.middleware.SessionMiddleware",
    "django.middleware.common.CommonMiddleware",
    "django.middleware.csrf.CsrfViewMiddleware",
    "django.contrib.auth.middleware.AuthenticationMiddleware",
    "django.contrib.messages.middleware.MessageMiddleware",
    "django.middleware.clickjacking.XFrameOptionsMiddleware",
]

ROOT_URLCONF = "planning_lab.urls"

TEMPLATES = [
    {
        "BACKEND": "django.template.backends.django.DjangoTemplates",
        "DIRS": [],
        "APP_DIRS": True,
        "OPTIONS": {
            "context_processors": [
                "django.template.context_processors.debug",
                "django.template.context_processors.request",
                "django.contrib.auth.context_processors.auth",
                "django.contrib.messages.context_processors.messages",
            ],
        },
    },
]

WSGI_APPLICATION = "planning_lab.wsgi.application"

# Run ledger database; SQLite unless DATABASE_URL points elsewhere
DATABASES = {
    "default": env.db(
        "DATABASE_URL", default=f"sqlite:///{BASE_DIR / 'planning_lab.sqlite3'}"
    )
}

# Internationalization
LANGUAGE_CODE = "en-us"
TIME_ZONE = "UTC"
USE_I18N = True
USE_TZ = True

STATIC_URL = "/static/"
STATIC_ROOT = os.path.join(BASE_DIR, "staticfiles")

DEFAULT_AUTO_FIELD = "django.db.models.BigAutoField"

# Numerical tolerances
PROBABILITY_TOLERANCE = env.float("PROBABILITY_TOLERANCE", default=1e-9)
RENORMALIZE_TOLERANCE = env.float("RENORMALIZE_TOLERANCE", default=1e-6)
STRATEGY_TIE_TOLERANCE = env.float("STRATEGY_TIE_TOLERANCE", default=1e-9)
BELIEF_DEDUP_THRESHOLD = env.float("BELIEF_DEDUP_THRESHOLD", default=1e-6)
ALPHA_DEDUP_TOLERANCE = env.float("ALPHA_DEDUP_TOLERANCE", default=1e-12)

# Solver limits
EXACT_BACKUP_CAP = env.int("EXACT_BACKUP_CAP", default=200_000)
ORACLE_LEAF_LIMIT = env.int("ORACLE_LEAF_LIMIT", default=1_000_000)
MAXIMIN_DUALITY_GAP = env.float("MAXIMIN_DUALITY_GAP", default=1e-4)
MAXIMIN_MAX_ITERATIONS = env.int("MAXIMIN_MAX_ITERATIONS", default=20_000)
MAXIMIN_METHOD = env("MAXIMIN_METHOD", default="fictitious")

# Scripted opponents
DRIVER_TEMPERATURE = env.float("DRIVER_TEMPERATURE", default=0.1)
SOCCER_STAY_PROBABILITY = env.float("SOCCER_STAY_PROBABILITY", default=0.1)
DEFAULT_HORIZON = env.int("DEFAULT_HORIZON", default=50)
DEFAULT_BELIEF_COUNT = env.int("DEFAULT_BELIEF_COUNT", default=100)

# Experiment artifacts
RESULTS_DIR = Path(env("RESULTS_DIR", default=str(BASE_DIR / "results")))
DEFAULT_WORKERS = env.int("DEFAULT_WORKERS", default=1)

UNFOLD = {
    "SITE_TITLE": "Planning Lab",
    "SITE_HEADER": "Planning Lab",
    "SITE_SUBHEADER": "Experiment ledger",
    "SITE_URL": reverse_lazy("admin:index"),
    "THEME": "auto",
    "ENVIRONMENT": "Development" if IS_DEV else "Live",
    "ENVIRONMENT_TITLE_PREFIX": "DEV · " if IS_DEV else "",
    "SIDEBAR": {
        "show_search": True,
        "show_all_applications": True,
        "navigation": [
            {
                "title": "Overview",
                "items": [
                    {
                        "title": "Dashboard",
                        "icon": "space_dashboard",
                        "link": reverse_lazy("admin:index"),
                    },
                ],
            },
            {
                "title": "Experiments",
                "collapsible": True,
                "items": [
                    {
                        "title": "Runs",
                        "icon": "science",
                        "link": reverse_lazy(
                            "admin:experiments_experimentrun_changelist"
                        ),
                    },
                ],
            },
        ],
    },
}

_APP_LOGGERS = (
    "posg",
    "nested",
    "lite",
    "baselines",
    "environments",
    "arena",
    "verify",
    "experiments",
)

LOGGING = {
    "version": 1,
    "disable_existing_loggers": False,
    "formatters": {
        "console": {
            "format": "[%(asctime)s] %(levelname)s %(name)s: %(message)s",
            "datefmt": "%Y-%m-%d %H:%M:%S",
        },
        "verbose": {
            "format": "%(asctime)s | %(levelname)s | %(name)s | %(message)s",
            "datefmt": "%Y-%m-%d %H:%M:%S",
        },
    },
    "handlers": {
        "console": {
            "class": "logging.StreamHandler",
            "level": LOG_LEVEL,
            "formatter": "console",
        },
        "app_file": {
            "class": "logging.handlers.RotatingFileHandler",
            "level": LOG_LEVEL,
            "formatter": "verbose",
            "filename": str(LOG_DIR / "application.log"),
            "maxBytes": 5 * 1024 * 1024,
            "backupCount": 3,
        },
    },
    "root": {
        "handlers": ["console", "app_file"],
        "level": LOG_LEVEL,
    },
    "loggers": {
        "django": {
            "handlers": ["console", "app_file"],
            "level": LOG_LEVEL,
            "propagate": False,
        },
        **{
            name: {
                "handlers": ["console", "app_file"],
                "level": LOG_LEVEL,
                "propagate": False,
            }
            for name in _APP_LOGGERS
        },
    },
}
