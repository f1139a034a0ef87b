"""
Management command to score rendered spectra against ground truth.
"""
import json

from thzrrf.apps.datasets.services import read_dataset
from thzrrf.apps.evaluation.metrics import evaluate_spectra
from thzrrf.common.commands import ThzCommand
from thzrrf.common.storage import atomic_write_text


class Command(ThzCommand):
    help = 'Compute PSNR, SSIM and beam agreement between predicted and ground-truth datasets'

    def add_arguments(self, parser):
        parser.add_argument('predicted', help='Rendered dataset directory')
        parser.add_argument('truth', help='Ground-truth dataset directory')
        parser.add_argument('--window', type=int, help='SSIM window (default THZ_SSIM_WINDOW)')
        parser.add_argument('--report', help='Write the per-sample report as JSON')

    def run(self, **options):
        predicted = read_dataset(options['predicted'])
        truth = read_dataset(options['truth'])
        if not len(predicted):
            raise ValueError(f"{options['predicted']} holds no samples")
        by_index = {s.index: s for s in truth}
        missing = [s.index for s in predicted if s.index not in by_index]
        if missing:
            raise ValueError(f"{len(missing)} predicted samples have no ground truth (first: {missing[0]})")

        report = evaluate_spectra(
            [s.spectrum for s in predicted],
            [by_index[s.index].spectrum for s in predicted],
            window=options['window'],
        )
        if options['report']:
            atomic_write_text(options['report'], json.dumps(report.as_dict(), indent=2) + '\n')

        psnr_lo, psnr_hi = report.psnr_range
        ssim_lo, ssim_hi = report.ssim_range
        hit_rate = report.beam_hit_rate()
        self.success(
            f"Evaluated {len(predicted)} samples:\n"
            f"  - PSNR: {report.psnr:.2f} dB (min {psnr_lo:.2f}, max {psnr_hi:.2f})\n"
            f"  - SSIM: {report.ssim:.3f} (min {ssim_lo:.3f}, max {ssim_hi:.3f})\n"
            f"  - Top-1 beam within one bin: "
            + (f"{hit_rate:.1%}" if hit_rate is not None else 'n/a')
        )
