"""
Management command to seed a Gaussian field from scene geometry.
"""
from thzrrf.apps.field.checkpoint import save_checkpoint
from thzrrf.apps.field.services import seed_from_scene
from thzrrf.apps.scenes.config import load_scene, resolve_scene_path
from thzrrf.apps.training.config import RunConfig, load_run_config
from thzrrf.common.commands import ThzCommand


class Command(ThzCommand):
    help = 'Seed Gaussians on scene facets and write a field checkpoint'

    def add_arguments(self, parser):
        parser.add_argument('scene', help='Scene YAML path or bundled scene name')
        parser.add_argument('--config', help='Training config YAML (its seeding section is used)')
        parser.add_argument('--out', required=True, help='Checkpoint file to write')

    def run(self, **options):
        run_cfg = load_run_config(options['config']) if options['config'] else RunConfig()
        scene = load_scene(resolve_scene_path(options['scene']))
        field = seed_from_scene(scene, run_cfg.seeding)
        path = save_checkpoint(options['out'], field)
        self.success(f"Seeded {len(field)} Gaussians (SH degree {field.sh_degree}) into {path}")
