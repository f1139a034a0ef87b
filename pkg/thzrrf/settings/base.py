"""
Django settings for thzrrf project.
Base settings shared across all environments.
"""

import os
from pathlib import Path
from dotenv import load_dotenv

# Build paths inside the project like this: BASE_DIR / 'subdir'.
BASE_DIR = Path(__file__).resolve().parent.parent.parent

# Load environment variables
load_dotenv(BASE_DIR / '.env')

SECRET_KEY = os.getenv('SECRET_KEY', 'thzrrf-local-only')

DEBUG = False

ALLOWED_HOSTS: list[str] = []

# Application definition
LOCAL_APPS = [
    'thzrrf.apps.scenes',
    'thzrrf.apps.field',
    'thzrrf.apps.rendering',
    'thzrrf.apps.training',
    'thzrrf.apps.channels',
    'thzrrf.apps.evaluation',
    'thzrrf.apps.datasets',
]

INSTALLED_APPS = LOCAL_APPS

# No relational storage: datasets, checkpoints and reports live on disk.
DATABASES: dict = {}

TIME_ZONE = 'UTC'
USE_TZ = True

DEFAULT_AUTO_FIELD = 'django.db.models.BigAutoField'

# Celery Configuration (Redis)
CELERY_BROKER_URL = os.getenv('REDIS_URL', 'redis://localhost:6379/0')
CELERY_RESULT_BACKEND = os.getenv('REDIS_URL', 'redis://localhost:6379/0')
CELERY_ACCEPT_CONTENT = ['json']
CELERY_TASK_SERIALIZER = 'json'
CELERY_RESULT_SERIALIZER = 'json'
CELERY_TIMEZONE = TIME_ZONE
CELERY_TASK_ALWAYS_EAGER = os.getenv('CELERY_TASK_ALWAYS_EAGER', 'True').lower() == 'true'

# Worker pool size for dataset generation and rendering
THZ_THREADS = max(1, int(os.getenv('THZ_THREADS', str(os.cpu_count() or 1))))

# Radio / rendering defaults
THZ_DEFAULT_CARRIER_HZ = float(os.getenv('THZ_DEFAULT_CARRIER_HZ', '300e9'))
THZ_GRID_ROWS = int(os.getenv('THZ_GRID_ROWS', '32'))
THZ_GRID_COLS = int(os.getenv('THZ_GRID_COLS', '64'))
THZ_SH_DEGREE = int(os.getenv('THZ_SH_DEGREE', '3'))
THZ_DENSITY_CUTOFF = float(os.getenv('THZ_DENSITY_CUTOFF', '1e-8'))
THZ_TRANSMITTANCE_CUTOFF = float(os.getenv('THZ_TRANSMITTANCE_CUTOFF', '1e-6'))

# Metrics
THZ_DB_FLOOR = float(os.getenv('THZ_DB_FLOOR', '-160.0'))
THZ_DB_CEILING = float(os.getenv('THZ_DB_CEILING', '0.0'))
THZ_SSIM_WINDOW = int(os.getenv('THZ_SSIM_WINDOW', '7'))

# Heatmaps
THZ_HEATMAP_COLORMAP = os.getenv('THZ_HEATMAP_COLORMAP', 'viridis')

# Bundled scenes
THZ_SCENES_DIR = Path(os.getenv('THZ_SCENES_DIR', str(BASE_DIR / 'scenes')))

# Logging
LOGGING = {
    'version': 1,
    'disable_existing_loggers': False,
    'formatters': {
        'verbose': {
            'format': '{levelname} {asctime} {module} {process:d} {thread:d} {message}',
            'style': '{',
        },
        'simple': {
            'format': '{levelname} {message}',
            'style': '{',
        },
    },
    'handlers': {
        'console': {
            'class': 'logging.StreamHandler',
            'formatter': 'verbose',
        },
    },
    'root': {
        'handlers': ['console'],
        'level': 'WARNING',
    },
    'loggers': {
        'django': {
            'handlers': ['console'],
            'level': os.getenv('DJANGO_LOG_LEVEL', 'INFO'),
            'propagate': False,
        },
        'thzrrf': {
            'handlers': ['console'],
            'level': os.getenv('THZ_LOG_LEVEL', 'DEBUG'),
            'propagate': False,
        },
    },
}
