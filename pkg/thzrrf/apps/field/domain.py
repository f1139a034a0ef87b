"""
Gaussian radio radiance field.

The field is stored as parallel arrays (one row per primitive) so the renderer
and trainer can work on all primitives at once; ``GaussianPrimitive`` is the
per-primitive view of a row.
"""
from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from functools import cached_property
from typing import Any, Dict

import numpy as np
from django.conf import settings
from numpy.typing import ArrayLike, NDArray
from scipy.constants import speed_of_light
from scipy.spatial.transform import Rotation

from thzrrf.common.geometry import RotationQ, Vec3
from thzrrf.common.harmonics import sh_coefficient_count


@dataclass(frozen=True, eq=False)
class GaussianPrimitive:
    center: Vec3
    scale: Vec3
    rotation: RotationQ
    density: float
    gain_sh: NDArray[np.float64]

    @property
    def sh_degree(self) -> int:
        return int(round(np.sqrt(len(self.gain_sh)))) - 1

    def covariance(self) -> NDArray[np.float64]:
        r = self.rotation.to_matrix()
        return r @ np.diag(self.scale ** 2) @ r.T

    def inverse_covariance(self) -> NDArray[np.float64]:
        r = self.rotation.to_matrix()
        return r @ np.diag(1.0 / self.scale ** 2) @ r.T


@dataclass(frozen=True)
class SeedConfig:
    """Mesh seeding parameters."""

    spacing: float = 0.25
    init_density: float = 0.9
    init_scale: float = 0.15
    flatten_ratio: float = 0.1
    init_gain: float = 0.1
    sh_degree: int = field(default_factory=lambda: settings.THZ_SH_DEGREE)
    include_tx: bool = True
    tx_scale: float = 0.05

    def __post_init__(self):
        if self.spacing <= 0.0:
            raise ValueError(f"spacing must be positive, got {self.spacing}")
        if self.init_density < 0.0:
            raise ValueError(f"init_density must be non-negative, got {self.init_density}")
        if self.init_scale <= 0.0 or self.tx_scale <= 0.0:
            raise ValueError("Gaussian scales must be positive")
        if not 0.0 < self.flatten_ratio <= 1.0:
            raise ValueError(f"flatten_ratio must be in (0, 1], got {self.flatten_ratio}")
        if self.init_gain <= 0.0:
            raise ValueError(f"init_gain must be positive, got {self.init_gain}")


@dataclass(eq=False)
class GaussianField:
    centers: NDArray[np.float64]
    scales: NDArray[np.float64]
    rotations: NDArray[np.float64]  # (N, 4) quaternions, w first
    densities: NDArray[np.float64]
    sh: NDArray[np.float64]  # (N, (L+1)^2) log-domain gain coefficients
    tx_position: NDArray[np.float64]
    carrier_frequency: float
    sh_degree: int
    metadata: Dict[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        self.centers = np.asarray(self.centers, dtype=np.float64).reshape(-1, 3)
        n = len(self.centers)
        self.scales = np.asarray(self.scales, dtype=np.float64).reshape(n, 3)
        self.rotations = np.asarray(self.rotations, dtype=np.float64).reshape(n, 4)
        self.densities = np.asarray(self.densities, dtype=np.float64).reshape(n)
        self.sh = np.asarray(self.sh, dtype=np.float64).reshape(n, sh_coefficient_count(self.sh_degree))
        self.tx_position = np.asarray(self.tx_position, dtype=np.float64).reshape(3)
        if np.any(self.scales <= 0.0):
            raise ValueError("Gaussian scales must be positive")
        if np.any(self.densities < 0.0):
            raise ValueError("Gaussian densities must be non-negative")
        if self.carrier_frequency <= 0.0:
            raise ValueError("Carrier frequency must be positive")

    def __len__(self) -> int:
        return len(self.centers)

    @property
    def wavelength(self) -> float:
        return speed_of_light / self.carrier_frequency

    @cached_property
    def rotation_matrices(self) -> NDArray[np.float64]:
        if len(self) == 0:
            return np.zeros((0, 3, 3))
        return Rotation.from_quat(self.rotations[:, [1, 2, 3, 0]]).as_matrix()

    @cached_property
    def inverse_covariances(self) -> NDArray[np.float64]:
        r = self.rotation_matrices
        return np.einsum('nij,nj,nkj->nik', r, 1.0 / self.scales ** 2, r)

    def primitive(self, index: int) -> GaussianPrimitive:
        w, x, y, z = self.rotations[index]
        return GaussianPrimitive(
            center=self.centers[index].copy(),
            scale=self.scales[index].copy(),
            rotation=RotationQ.from_components(w, x, y, z),
            density=float(self.densities[index]),
            gain_sh=self.sh[index].copy(),
        )

    def with_sh(self, sh: ArrayLike) -> GaussianField:
        """Copy sharing this field's geometry with new SH coefficients."""
        return dataclasses.replace(self, sh=np.array(sh, dtype=np.float64),
                                   metadata=dict(self.metadata))

    def bounding_box(self, margin_sigmas: float = 0.0) -> tuple[Vec3, Vec3]:
        if len(self) == 0:
            raise ValueError("Empty field has no bounding box")
        pad = margin_sigmas * self.scales.max(axis=1, keepdims=True)
        return (self.centers - pad).min(axis=0), (self.centers + pad).max(axis=0)
