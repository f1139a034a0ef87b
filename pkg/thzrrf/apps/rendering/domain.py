"""
Per-ray and per-pose rendering records.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np
from numpy.typing import NDArray

from thzrrf.common.geometry import RotationQ, SphericalGrid, Vec3


@dataclass(frozen=True, eq=False)
class PathContext:
    """Full-path information recovered from a ray's pseudo-surface point."""

    pseudo_surface_point: Vec3
    l_prev: float
    aod: Vec3
    cumulative_gain: float
    dominant_gaussian_index: int
    dominant_view_depth: float


@dataclass(frozen=True)
class RayBlendTerm:
    gaussian_index: int
    effective_density: float
    transmittance: float
    view_depth: float
    path_gain: float

    @property
    def weight(self) -> float:
        return self.effective_density * self.transmittance


@dataclass(frozen=True, eq=False)
class RayRender:
    """Rendered channels of one ray; a miss has zero gain, zero ToF and no AoD."""

    path_gain: float
    tof: float
    aod: Vec3
    context: Optional[PathContext] = None

    @property
    def is_miss(self) -> bool:
        return self.context is None

    @classmethod
    def miss(cls) -> RayRender:
        return cls(path_gain=0.0, tof=0.0, aod=np.zeros(3))


@dataclass(eq=False)
class BlendCache:
    """
    Geometry-only forward pass for one receiver pose.

    Terms are flat arrays sorted by (pixel, view depth). Per-pixel arrays are
    indexed by the flat pixel ``row * n_az + col``; pixels without terms have
    ``dominant == -1``.
    """

    grid: SphericalGrid
    rx_position: NDArray[np.float64]
    rx_orientation: RotationQ
    wavelength: float
    pixel: NDArray[np.int64]
    gaussian: NDArray[np.int64]
    weight: NDArray[np.float64]  # effective density * transmittance
    depth: NDArray[np.float64]
    basis: NDArray[np.float64]  # (n_pixels, K) SH basis at the pixel's render direction
    dominant: NDArray[np.int64]
    dominant_depth: NDArray[np.float64]
    l_prev: NDArray[np.float64]
    aod_az: NDArray[np.float64]
    aod_el: NDArray[np.float64]

    @property
    def term_count(self) -> int:
        return len(self.pixel)

    @property
    def hit_pixels(self) -> NDArray[np.bool_]:
        return self.dominant >= 0
