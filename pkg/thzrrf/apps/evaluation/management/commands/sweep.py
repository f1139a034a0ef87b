"""
Management command to run the training-size sweep of full-path vs legacy rendering.
"""
import logging
from dataclasses import asdict, replace

from celery import group

from thzrrf.apps.evaluation.services import (
    VARIANTS, SweepRow, format_sweep_table, sweep, write_sweep_table,
)
from thzrrf.apps.evaluation.tasks import run_sweep_cell
from thzrrf.apps.scenes.config import load_scene, resolve_scene_path
from thzrrf.apps.training.config import RunConfig, load_run_config
from thzrrf.common.commands import ThzCommand

logger = logging.getLogger(__name__)


def _plain(options: dict) -> dict:
    """Task-safe copy of dataclass fields: enum members become their string values."""
    return {k: (str(v) if hasattr(v, 'label') else v) for k, v in options.items()}


class Command(ThzCommand):
    help = 'Train both rendering variants on nested training subsets and score them on a fixed test set'

    def add_arguments(self, parser):
        parser.add_argument('scene', help='Scene YAML path or bundled scene name')
        parser.add_argument('--config', help='Training config YAML (training, seeding and sweep sections)')
        parser.add_argument('--sizes', type=int, nargs='+', help='Override sweep.sizes')
        parser.add_argument('--test-size', type=int, help='Override sweep.test_size')
        parser.add_argument('--pool-seed', type=int, help='Override sweep.pool_seed')
        parser.add_argument('--epochs', type=int, help='Override training.epochs')
        parser.add_argument('--out', required=True, help='Tab-separated sweep table to write')
        parser.add_argument(
            '--distributed',
            action='store_true',
            help='Dispatch cells as Celery tasks (runs in-process when CELERY_TASK_ALWAYS_EAGER)',
        )
        self.add_grid_arguments(parser)
        self.add_threads_argument(parser)

    def run(self, **options):
        run_cfg = load_run_config(options['config']) if options['config'] else RunConfig()
        overrides = {key: options[opt] for key, opt in (
            ('sizes', 'sizes'), ('test_size', 'test_size'), ('pool_seed', 'pool_seed'),
            ('grid_rows', 'rows'), ('grid_cols', 'cols'),
        ) if options[opt]}
        sweep_cfg = replace(run_cfg.sweep, **overrides)
        train_cfg = run_cfg.training
        if options['epochs']:
            train_cfg = replace(train_cfg, epochs=options['epochs'])

        scene_path = resolve_scene_path(options['scene'])
        scene = load_scene(scene_path)
        self.stdout.write(
            f"Sweeping sizes {list(sweep_cfg.sizes)} with {sweep_cfg.test_size} held-out samples "
            f"on scene '{scene.name}'"
        )

        if options['distributed']:
            job = group(
                run_sweep_cell.s(str(scene_path), size, str(variant), _plain(asdict(sweep_cfg)),
                                 _plain(asdict(train_cfg)), _plain(asdict(run_cfg.seeding)))
                for size in sweep_cfg.sizes for variant in VARIANTS
            )
            rows = [SweepRow(**row) for row in job.apply_async().get()]
        else:
            rows = sweep(scene, sweep_cfg.sizes, sweep_cfg.test_size, train_cfg, run_cfg.seeding,
                         sweep_cfg.pool_seed, sweep_cfg.grid, options['threads'])

        path = write_sweep_table(rows, options['out'])
        self.stdout.write(format_sweep_table(rows))
        self.success(f"Wrote sweep table with {len(rows)} rows to {path}")
