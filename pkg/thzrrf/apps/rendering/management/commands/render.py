"""
Management command to render spatial spectra and heatmaps from a trained field.
"""
from pathlib import Path

import numpy as np
from django.core.management.base import CommandError

from thzrrf.apps.datasets.services import read_dataset, write_dataset
from thzrrf.apps.field.checkpoint import load_checkpoint
from thzrrf.apps.rendering.enums import RenderMode
from thzrrf.apps.rendering.heatmaps import write_heatmaps
from thzrrf.apps.rendering.services import render_spectra
from thzrrf.apps.scenes.domain import Dataset, Sample
from thzrrf.common.commands import USAGE_ERROR, ThzCommand
from thzrrf.common.geometry import RotationQ
from thzrrf.common.utils import sample_filename


class Command(ThzCommand):
    help = 'Render spatial spectra (and PNG heatmaps) at dataset poses or a single position'

    def add_arguments(self, parser):
        parser.add_argument('checkpoint', help='Trained field checkpoint')
        poses = parser.add_mutually_exclusive_group()
        poses.add_argument('--dataset', help='Render at every pose of this dataset, on its grid')
        poses.add_argument('--position', type=float, nargs=3, metavar=('X', 'Y', 'Z'),
                           help='Render a single identity-oriented receiver')
        parser.add_argument('--mode', choices=RenderMode.values, default=RenderMode.FULL_PATH,
                            help='Rendering mode')
        parser.add_argument('--limit', type=int, help='Render only the first N dataset poses')
        parser.add_argument('--out', required=True, help='Output directory')
        parser.add_argument('--no-heatmaps', action='store_true', help='Skip PNG heatmaps')
        self.add_grid_arguments(parser)
        self.add_threads_argument(parser)

    def run(self, **options):
        field, calibration = load_checkpoint(options['checkpoint'])
        mode = RenderMode(options['mode'])
        if mode == RenderMode.LEGACY and calibration is None:
            raise CommandError(
                f"{options['checkpoint']} has no calibration block; legacy rendering needs one",
                returncode=USAGE_ERROR,
            )

        if options['dataset']:
            source = read_dataset(options['dataset'], threads=options['threads'])
            samples = source.samples[:options['limit']] if options['limit'] else source.samples
            grid, scene_hash, seed = source.grid, source.scene_digest, source.rng_seed
            poses = [(s.rx_position, s.rx_orientation) for s in samples]
            indices = [s.index for s in samples]
        elif options['position']:
            grid, scene_hash, seed = self.grid_from(options), '', 0
            poses = [(np.array(options['position']), RotationQ.identity())]
            indices = [0]
        else:
            raise CommandError('Specify --dataset or --position', returncode=USAGE_ERROR)

        spectra = render_spectra(field, poses, grid, mode, calibration, options['threads'])
        rendered = Dataset(
            grid=grid,
            carrier_frequency=field.carrier_frequency,
            tx_position=field.tx_position,
            samples=[Sample(index=i, spectrum=s, mpcs=[]) for i, s in zip(indices, spectra)],
            rng_seed=seed,
            scene_digest=scene_hash,
        )
        out_dir = Path(options['out'])
        manifest = write_dataset(rendered, out_dir, threads=options['threads'], with_mpcs=False)

        images = 0
        if not options['no_heatmaps']:
            for sample in rendered:
                images += len(write_heatmaps(sample.spectrum, out_dir, sample_filename(sample.index, '')))
        self.success(
            f"Rendered {len(spectra)} spectra ({mode}) to {out_dir}\n"
            f"  - Manifest: {manifest}\n"
            f"  - Heatmaps: {images}"
        )
