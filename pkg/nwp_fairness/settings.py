"""
Django settings for the nwp_fairness project.

The project has no web surface: Django supplies the app registry, settings,
logging configuration, management commands and the test runner.
Process-level values come from nwp_fairness.config.load_configuration().
"""

from .config import BASE_DIR, load_configuration

_config = load_configuration()

SECRET_KEY = _config['SECRET_KEY']

DEBUG = _config['DEBUG']

ENVIRONMENT = _config['ENVIRONMENT']

ALLOWED_HOSTS = []


# Application definition

INSTALLED_APPS = [
    'django.contrib.contenttypes',
    'django.contrib.auth',

    "rest_framework",

    # Engine apps, one per module
    "core",
    "classifier",
    "modulation",
    "temporal",
    "baseline",
    "datasets",
    "metrics",
    "cli",
]

# Nothing is persisted; an in-memory database keeps Django's checks satisfied
DATABASES = {
    'default': {
        'ENGINE': 'django.db.backends.sqlite3',
        'NAME': ':memory:',
    }
}

LOGGING = _config['LOGGING']


# Engine settings

NWP_DEFAULT_SEED = _config['DEFAULT_SEED']

NWP_OUTPUT_DIR = _config['OUTPUT_DIR']

NWP_SCHEMA_DIR = _config['SCHEMA_DIR']


# Internationalization

LANGUAGE_CODE = 'en-us'

TIME_ZONE = 'UTC'

USE_I18N = False

USE_TZ = True

DEFAULT_AUTO_FIELD = 'django.db.models.BigAutoField'
