from django.apps import AppConfig


class RenderingConfig(AppConfig):
    default_auto_field = 'django.db.models.BigAutoField'
    name = 'thzrrf.apps.rendering'
    verbose_name = 'Spectrum rendering'
