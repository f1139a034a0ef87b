import logging

from django.apps import AppConfig

logger = logging.getLogger(__name__)


class DatasetsConfig(AppConfig):
    default_auto_field = 'django.db.models.BigAutoField'
    name = 'thzrrf.apps.datasets'
    verbose_name = 'Datasets'

    def ready(self):
        """Log the numeric runtime once the app registry is loaded."""
        from django.conf import settings

        logger.debug(
            "thzrrf ready: threads=%d grid=%dx%d sh_degree=%d",
            settings.THZ_THREADS,
            settings.THZ_GRID_ROWS,
            settings.THZ_GRID_COLS,
            settings.THZ_SH_DEGREE,
        )
