"""
Management command to train a field's SH gain coefficients on a dataset.
"""
import json
from dataclasses import replace

from django.core.management.base import CommandError

from thzrrf.apps.datasets.services import read_dataset
from thzrrf.apps.field.checkpoint import load_checkpoint, save_checkpoint
from thzrrf.apps.field.services import seed_from_scene
from thzrrf.apps.rendering.enums import RenderMode
from thzrrf.apps.scenes.config import load_scene, resolve_scene_path
from thzrrf.apps.training.config import RunConfig, load_run_config
from thzrrf.apps.training.services import legacy_calibration, train
from thzrrf.common.commands import USAGE_ERROR, ThzCommand
from thzrrf.common.storage import atomic_write_text


class Command(ThzCommand):
    help = 'Train SH gain coefficients against a simulated dataset'

    def add_arguments(self, parser):
        parser.add_argument('dataset', help='Training dataset directory')
        source = parser.add_mutually_exclusive_group()
        source.add_argument('--checkpoint', help='Seeded field checkpoint to start from')
        source.add_argument('--scene', help='Scene to seed a fresh field from')
        parser.add_argument('--config', help='Training config YAML')
        parser.add_argument('--mode', choices=RenderMode.values, help='Override training.render_mode')
        parser.add_argument('--epochs', type=int, help='Override training.epochs')
        parser.add_argument('--test-dataset', help='Held-out dataset directory to score after training')
        parser.add_argument('--out', required=True, help='Trained checkpoint to write')
        parser.add_argument('--report', help='Write the training report as JSON')
        self.add_threads_argument(parser)

    def run(self, **options):
        run_cfg = load_run_config(options['config']) if options['config'] else RunConfig()
        cfg = run_cfg.training
        overrides = {}
        if options['mode']:
            overrides['render_mode'] = RenderMode(options['mode'])
        if options['epochs']:
            overrides['epochs'] = options['epochs']
        if cfg.checkpoint_every:
            overrides['checkpoint_path'] = options['out']
        cfg = replace(cfg, **overrides)

        calibration = None
        if options['checkpoint']:
            field, calibration = load_checkpoint(options['checkpoint'])
        elif options['scene']:
            field = seed_from_scene(load_scene(resolve_scene_path(options['scene'])), run_cfg.seeding)
        else:
            raise CommandError('Specify --checkpoint or --scene', returncode=USAGE_ERROR)

        dataset = read_dataset(options['dataset'], threads=options['threads'])
        test_dataset = read_dataset(options['test_dataset']) if options['test_dataset'] else None
        self.stdout.write(
            f"Training {len(field)} Gaussians on {len(dataset)} samples "
            f"({cfg.render_mode}, {cfg.epochs} epochs, {cfg.optimizer})"
        )

        if cfg.render_mode != RenderMode.LEGACY:
            calibration = None
        elif calibration is None:
            calibration = legacy_calibration(field, dataset, threads=options['threads'])
        trained, report = train(field, dataset, cfg, calibration=calibration,
                                test_dataset=test_dataset, threads=options['threads'])
        path = save_checkpoint(options['out'], trained, calibration)
        if options['report']:
            atomic_write_text(options['report'], json.dumps(report.as_dict(), indent=2) + '\n')

        lines = [
            f"Trained checkpoint written to {path}",
            f"  - Final loss: {report.loss_trace[-1]:.4f}",
            f"  - Train PSNR / SSIM: {report.train_psnr:.2f} dB / {report.train_ssim:.3f}",
        ]
        if report.test_psnr is not None:
            lines.append(f"  - Test PSNR / SSIM: {report.test_psnr:.2f} dB / {report.test_ssim:.3f}")
        lines.append(f"  - Wall time: {report.wall_seconds:.1f} s")
        self.success('\n'.join(lines))
