import os
from celery import Celery

# Workers read the same settings module as manage.py.
os.environ.setdefault('DJANGO_SETTINGS_MODULE', 'thzrrf.settings.dev')

app = Celery('thzrrf')

# CELERY_* keys in the Django settings configure broker, serializers and eager mode.
app.config_from_object('django.conf:settings', namespace='CELERY')

# Sweep cells are long CPU-bound jobs; keep them off the default queue.
app.conf.task_routes = {'thzrrf.apps.evaluation.tasks.*': {'queue': 'sweeps'}}

# Picks up thzrrf.apps.evaluation.tasks.
app.autodiscover_tasks()
