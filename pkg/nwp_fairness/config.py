"""
Configuration management for the NWP fairness engine
Environment variables (or a local .env file) drive the process-level settings;
run-level parameters live in the JSON run config read by the commands.
"""

from pathlib import Path

import environ

BASE_DIR = Path(__file__).resolve().parent.parent

env = environ.Env()


def str_to_bool(value):
    """Convert string to boolean"""
    if isinstance(value, bool):
        return value
    if isinstance(value, str):
        return value.lower() in ('true', '1', 'yes', 'on')
    return bool(value)


def get_logging_config(level):
    """Generate logging configuration; everything goes to standard error"""
    return {
        'version': 1,
        'disable_existing_loggers': False,
        'formatters': {
            'plain': {
                'format': '{levelname} {name} {message}',
                'style': '{',
            },
        },
        'handlers': {
            'console': {
                'class': 'logging.StreamHandler',
                'stream': 'ext://sys.stderr',
                'formatter': 'plain',
            },
        },
        'root': {
            'handlers': ['console'],
            'level': level,
        },
    }


def load_configuration():
    """ Load environment vars (optionally from a .env file next to manage.py)"""
    env_file = BASE_DIR / '.env'
    if env_file.exists():
        environ.Env.read_env(str(env_file))

    environment = env.str('NWP_ENVIRONMENT', default='local')
    debug = str_to_bool(env.str('NWP_DEBUG', default='false'))

    config = {
        'SECRET_KEY': env.str('NWP_SECRET_KEY', default='nwp-fairness-insecure-local-key'),
        'DEBUG': debug,
        'ENVIRONMENT': environment,
        'DEFAULT_SEED': env.int('NWP_DEFAULT_SEED', default=0),
        'OUTPUT_DIR': Path(env.str('NWP_OUTPUT_DIR', default=str(BASE_DIR / 'runs'))),
        'SCHEMA_DIR': BASE_DIR / 'datasets' / 'schemas',
    }

    level = env.str('NWP_LOG_LEVEL', default='INFO' if debug else 'WARNING').upper()
    config['LOGGING'] = get_logging_config(level)
    return config
