"""
Shared plumbing for management commands: exit-code mapping and common arguments.

Exit codes: 0 success, 1 runtime failure, 2 usage / IO / parse error.
"""
import logging

from django.conf import settings
from django.core.management.base import BaseCommand, CommandError

from thzrrf.common.config import ConfigError
from thzrrf.common.geometry import SphericalGrid
from thzrrf.common.storage import FormatError

logger = logging.getLogger(__name__)

USAGE_ERROR = 2
RUNTIME_ERROR = 1


class ThzCommand(BaseCommand):
    """Base command; subclasses implement ``run`` instead of ``handle``."""

    def run(self, **options):
        raise NotImplementedError

    def handle(self, *args, **options):
        try:
            self.run(**options)
        except CommandError:
            raise
        except FileNotFoundError as e:
            raise CommandError(str(e), returncode=USAGE_ERROR) from e
        except (ConfigError, FormatError) as e:
            raise CommandError(str(e), returncode=USAGE_ERROR) from e
        except ValueError as e:
            raise CommandError(f'Invalid argument: {e}', returncode=USAGE_ERROR) from e
        except Exception as e:
            logger.exception(f"{self.__module__.rsplit('.', 1)[-1]} failed")
            raise CommandError(str(e), returncode=RUNTIME_ERROR) from e

    def add_grid_arguments(self, parser):
        parser.add_argument('--rows', type=int, default=None,
                            help=f'Elevation bins (default THZ_GRID_ROWS={settings.THZ_GRID_ROWS})')
        parser.add_argument('--cols', type=int, default=None,
                            help=f'Azimuth bins (default THZ_GRID_COLS={settings.THZ_GRID_COLS})')

    def add_threads_argument(self, parser):
        parser.add_argument('--threads', type=int, default=None,
                            help='Worker threads (default THZ_THREADS)')

    def grid_from(self, options) -> SphericalGrid:
        return SphericalGrid(options['rows'] or settings.THZ_GRID_ROWS,
                             options['cols'] or settings.THZ_GRID_COLS)

    def success(self, message: str) -> None:
        self.stdout.write(self.style.SUCCESS(message))
