"""
Scene description and ground-truth channel records: materials, triangular facets,
multipath components and receiver-side spatial spectra.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, Iterator, List, Optional, Sequence

import numpy as np
from numpy.typing import ArrayLike, NDArray
from scipy.constants import speed_of_light

from thzrrf.common.geometry import RotationQ, SphericalGrid, Vec3, az_el_to_dir, normalize

DEGENERATE_AREA = 1e-12  # m^2


@dataclass(frozen=True)
class Material:
    """THz surface parameters of the directive scattering model."""

    name: str
    scattering_coefficient: float
    lobe_exponent: int
    reflection_reduction: float = 1.0

    def __post_init__(self):
        if not 0.0 <= self.scattering_coefficient <= 1.0:
            raise ValueError(f"Material {self.name}: scattering_coefficient must be in [0, 1]")
        if isinstance(self.lobe_exponent, bool) or int(self.lobe_exponent) != self.lobe_exponent \
                or self.lobe_exponent < 1:
            raise ValueError(f"Material {self.name}: lobe_exponent must be an integer >= 1")
        if not 0.0 <= self.reflection_reduction <= 1.0:
            raise ValueError(f"Material {self.name}: reflection_reduction must be in [0, 1]")


@dataclass(frozen=True, eq=False)
class Facet:
    """
    Triangle with counter-clockwise winding seen from its outward side; the
    outward normal follows the right-hand rule on ``(v1 - v0) x (v2 - v0)``.
    """

    vertices: NDArray[np.float64]
    material: str
    normal: Vec3 = field(init=False)
    area: float = field(init=False)

    def __post_init__(self):
        verts = np.asarray(self.vertices, dtype=np.float64).reshape(3, 3)
        cross = np.cross(verts[1] - verts[0], verts[2] - verts[0])
        object.__setattr__(self, 'vertices', verts)
        object.__setattr__(self, 'area', float(0.5 * np.linalg.norm(cross)))
        object.__setattr__(self, 'normal', normalize(cross))

    @property
    def is_degenerate(self) -> bool:
        return self.area <= DEGENERATE_AREA

    @property
    def centroid(self) -> Vec3:
        return self.vertices.mean(axis=0)


@dataclass(frozen=True, eq=False)
class SamplingVolume:
    """Axis-aligned box receivers are drawn from."""

    min_corner: NDArray[np.float64]
    max_corner: NDArray[np.float64]

    def __post_init__(self):
        lo = np.asarray(self.min_corner, dtype=np.float64).reshape(3)
        hi = np.asarray(self.max_corner, dtype=np.float64).reshape(3)
        if np.any(hi < lo):
            raise ValueError(f"Sampling volume max {hi.tolist()} below min {lo.tolist()}")
        object.__setattr__(self, 'min_corner', lo)
        object.__setattr__(self, 'max_corner', hi)

    def contains(self, points: ArrayLike) -> NDArray[np.bool_]:
        pts = np.asarray(points, dtype=np.float64)
        return np.all((pts >= self.min_corner) & (pts <= self.max_corner), axis=-1)


@dataclass(eq=False)
class Scene:
    facets: List[Facet]
    materials: Dict[str, Material]
    tx_position: NDArray[np.float64]
    carrier_frequency: float
    sampling_volume: Optional[SamplingVolume] = None
    facet_sampling_density: float = 16.0  # scatter sample points per m^2
    name: str = 'scene'

    def __post_init__(self):
        self.tx_position = np.asarray(self.tx_position, dtype=np.float64).reshape(3)
        if self.carrier_frequency <= 0.0:
            raise ValueError("Carrier frequency must be positive")
        if self.facet_sampling_density <= 0.0:
            raise ValueError("Facet sampling density must be positive")
        for index, facet in enumerate(self.facets):
            if facet.material not in self.materials:
                raise ValueError(f"Facet {index} references unknown material '{facet.material}'")

    @property
    def wavelength(self) -> float:
        return speed_of_light / self.carrier_frequency

    def bounding_box(self) -> tuple[Vec3, Vec3]:
        """Axis-aligned bounds of all facet vertices and the transmitter."""
        points = [self.tx_position[None, :]] + [f.vertices for f in self.facets]
        stacked = np.concatenate(points, axis=0)
        return stacked.min(axis=0), stacked.max(axis=0)


@dataclass(frozen=True, eq=False)
class Mpc:
    """One multipath component: power gain, phase, delay and its two angles."""

    amplitude: float
    phase: float
    delay: float
    aoa: Vec3
    aod: Vec3
    bounce_point: Optional[Vec3] = None

    @property
    def is_los(self) -> bool:
        return self.bounce_point is None

    @property
    def path_length(self) -> float:
        return self.delay * speed_of_light


@dataclass(eq=False)
class SpatialSpectrum:
    """
    Receiver-side RF image. Every channel is an ``(n_el, n_az)`` plane.
    Miss pixels carry ``path_gain = 0``, ``tof = 0`` and a zero AoD.
    """

    grid: SphericalGrid
    path_gain: NDArray[np.float64]
    tof: NDArray[np.float64]
    aod_az: NDArray[np.float64]
    aod_el: NDArray[np.float64]
    rx_position: NDArray[np.float64]
    rx_orientation: RotationQ = field(default_factory=RotationQ.identity)

    def __post_init__(self):
        for name in ('path_gain', 'tof', 'aod_az', 'aod_el'):
            plane = np.asarray(getattr(self, name), dtype=np.float64)
            if plane.shape != self.grid.shape:
                raise ValueError(f"Channel {name} has shape {plane.shape}, grid is {self.grid.shape}")
            setattr(self, name, plane)
        self.rx_position = np.asarray(self.rx_position, dtype=np.float64).reshape(3)

    @classmethod
    def empty(cls, grid: SphericalGrid, rx_position: ArrayLike,
              rx_orientation: Optional[RotationQ] = None) -> SpatialSpectrum:
        zeros = np.zeros(grid.shape, dtype=np.float64)
        return cls(
            grid=grid,
            path_gain=zeros.copy(),
            tof=zeros.copy(),
            aod_az=zeros.copy(),
            aod_el=zeros.copy(),
            rx_position=np.asarray(rx_position, dtype=np.float64),
            rx_orientation=rx_orientation or RotationQ.identity(),
        )

    @property
    def hit_mask(self) -> NDArray[np.bool_]:
        return self.path_gain > 0.0

    def aod_dirs(self) -> Vec3:
        dirs = az_el_to_dir(self.aod_az, self.aod_el)
        dirs[~self.hit_mask] = 0.0
        return dirs


@dataclass(eq=False)
class Sample:
    index: int
    spectrum: SpatialSpectrum
    mpcs: List[Mpc]

    @property
    def rx_position(self) -> NDArray[np.float64]:
        return self.spectrum.rx_position

    @property
    def rx_orientation(self) -> RotationQ:
        return self.spectrum.rx_orientation


@dataclass(eq=False)
class Dataset:
    grid: SphericalGrid
    carrier_frequency: float
    tx_position: NDArray[np.float64]
    samples: List[Sample]
    rng_seed: int = 0
    scene_digest: str = ''

    def __len__(self) -> int:
        return len(self.samples)

    def __iter__(self) -> Iterator[Sample]:
        return iter(self.samples)

    def __getitem__(self, item: int) -> Sample:
        return self.samples[item]

    def subset(self, positions: Sequence[int]) -> Dataset:
        """Dataset restricted to the samples at the given list positions."""
        return Dataset(
            grid=self.grid,
            carrier_frequency=self.carrier_frequency,
            tx_position=self.tx_position,
            samples=[self.samples[i] for i in positions],
            rng_seed=self.rng_seed,
            scene_digest=self.scene_digest,
        )
