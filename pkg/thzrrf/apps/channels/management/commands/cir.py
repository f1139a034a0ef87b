"""
Management command to export a sample's channel impulse response.
"""
from thzrrf.apps.channels.domain import ALLOWED_MULTIPLIERS
from thzrrf.apps.channels.exports import write_cir
from thzrrf.apps.channels.services import best_beams, channelization, mpcs_to_cir
from thzrrf.apps.datasets.services import read_dataset
from thzrrf.common.commands import ThzCommand


class Command(ThzCommand):
    help = 'Synthesize the tapped CIR of one dataset sample under a THz channelization'

    def add_arguments(self, parser):
        parser.add_argument('dataset', help='Ground-truth dataset directory (with MPC files)')
        parser.add_argument('--index', type=int, default=0, help='Sample index')
        parser.add_argument('--multiplier', type=int, default=1, choices=ALLOWED_MULTIPLIERS,
                            help='Bandwidth as a multiple of 2.16 GHz')
        parser.add_argument('--out', required=True, help='CIR file to write')
        parser.add_argument('--binary', action='store_true', help='Write the binary32 variant')
        parser.add_argument('--beams', type=int, default=0, help='Also list the K strongest beams')

    def run(self, **options):
        dataset = read_dataset(options['dataset'])
        matches = [s for s in dataset if s.index == options['index']]
        if not matches:
            raise ValueError(f"Sample {options['index']} is not in {options['dataset']}")
        sample = matches[0]

        ch = channelization(options['multiplier'])
        cir = mpcs_to_cir(sample.mpcs, ch)
        path = write_cir(cir, options['out'], binary=options['binary'])
        self.success(
            f"Wrote CIR of sample {sample.index} to {path}\n"
            f"  - Bandwidth: {ch.bandwidth / 1e9:.2f} GHz, Ts {ch.sampling_interval * 1e12:.2f} ps\n"
            f"  - Taps: {len(cir.taps)} ({len(cir.nonzero_taps)} non-zero) from {len(sample.mpcs)} MPCs"
        )
        if options['beams'] < 1:
            return
        for rank, beam in enumerate(best_beams(sample.spectrum, options['beams']), 1):
            self.stdout.write(
                f"  {rank}. bin ({beam.row}, {beam.col}) gain {beam.path_gain:.3e} tof {beam.tof * 1e9:.3f} ns"
            )
