import factory
import numpy as np

from thzrrf.apps.field.domain import GaussianField, SeedConfig
from thzrrf.apps.rendering.enums import RenderMode
from thzrrf.apps.scenes.domain import Facet, Material, SamplingVolume, Scene
from thzrrf.apps.training.domain import TrainConfig
from thzrrf.apps.training.enums import LossKind, OptimizerKind
from thzrrf.common.harmonics import sh_coefficient_count


class MaterialFactory(factory.Factory):
    class Meta:
        model = Material

    name = factory.Sequence(lambda n: f"material{n}")
    scattering_coefficient = 0.6
    lobe_exponent = 4
    reflection_reduction = 1.0


class FacetFactory(factory.Factory):
    """Unit right triangle in the x = 0 plane facing +x."""

    class Meta:
        model = Facet

    vertices = factory.LazyFunction(lambda: np.array([[0.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]]))
    material = 'plaster'


class SamplingVolumeFactory(factory.Factory):
    class Meta:
        model = SamplingVolume

    min_corner = factory.LazyFunction(lambda: np.array([1.0, -0.5, 0.5]))
    max_corner = factory.LazyFunction(lambda: np.array([2.0, 0.5, 1.5]))


class SceneFactory(factory.Factory):
    """One-facet scene with a transmitter in front of the facet."""

    class Meta:
        model = Scene

    facets = factory.LazyFunction(lambda: [FacetFactory()])
    materials = factory.LazyFunction(lambda: {'plaster': MaterialFactory(name='plaster')})
    tx_position = factory.LazyFunction(lambda: np.array([1.5, 0.3, 0.3]))
    carrier_frequency = 3.0e11
    sampling_volume = factory.SubFactory(SamplingVolumeFactory)
    facet_sampling_density = 36.0
    name = factory.Sequence(lambda n: f"scene{n}")


class SeedConfigFactory(factory.Factory):
    class Meta:
        model = SeedConfig

    spacing = 0.5
    init_density = 0.9
    init_scale = 0.15
    flatten_ratio = 0.1
    init_gain = 0.1
    sh_degree = 2
    include_tx = True
    tx_scale = 0.05


class TrainConfigFactory(factory.Factory):
    class Meta:
        model = TrainConfig

    learning_rate = 0.05
    epochs = 5
    loss_kind = LossKind.L2_DB
    db_floor = -160.0
    rng_seed = 0
    batch_size = 4
    optimizer = OptimizerKind.ADAM
    render_mode = RenderMode.FULL_PATH
    log_every = 0


def build_field(centers, scales=0.1, densities=0.693, sh_degree=1, tx=(0.0, 0.0, 0.0),
                carrier=3.0e11, sh=None) -> GaussianField:
    """Field of unrotated Gaussians; scalar arguments broadcast to every Gaussian."""
    centers = np.atleast_2d(np.asarray(centers, dtype=np.float64))
    n = len(centers)
    return GaussianField(
        centers=centers,
        scales=np.broadcast_to(np.asarray(scales, dtype=np.float64), (n, 3)).copy(),
        rotations=np.tile([1.0, 0.0, 0.0, 0.0], (n, 1)),
        densities=np.broadcast_to(np.asarray(densities, dtype=np.float64), (n,)).copy(),
        sh=np.zeros((n, sh_coefficient_count(sh_degree))) if sh is None else sh,
        tx_position=np.asarray(tx, dtype=np.float64),
        carrier_frequency=carrier,
        sh_degree=sh_degree,
    )
