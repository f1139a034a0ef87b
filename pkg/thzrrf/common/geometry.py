"""
Geometric primitives shared by the simulator, the Gaussian field and the renderer:
unit directions, quaternion rotations and equirectangular angle-of-arrival grids.

Directions are plain ``float64`` numpy arrays of shape ``(..., 3)``; functions
accept a single vector or a stack of them.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property
from typing import Tuple

import numpy as np
from numpy.typing import ArrayLike, NDArray
from scipy.spatial.transform import Rotation

Vec3 = NDArray[np.float64]

UNIT_TOLERANCE = 1e-9


def normalize(v: ArrayLike) -> Vec3:
    """Normalize vectors along the last axis; zero vectors stay zero."""
    arr = np.asarray(v, dtype=np.float64)
    norm = np.linalg.norm(arr, axis=-1, keepdims=True)
    return np.divide(arr, norm, out=np.zeros_like(arr), where=norm > 0.0)


def unit_dir(v: ArrayLike) -> Vec3:
    """Return ``v`` as a unit direction, rejecting zero-length input."""
    arr = np.asarray(v, dtype=np.float64).reshape(3)
    norm = float(np.linalg.norm(arr))
    if not math.isfinite(norm) or norm == 0.0:
        raise ValueError(f"Cannot build a direction from {arr.tolist()}")
    return arr / norm


def is_unit(v: ArrayLike, tol: float = UNIT_TOLERANCE) -> bool:
    arr = np.asarray(v, dtype=np.float64)
    return bool(np.all(np.abs(np.sum(arr * arr, axis=-1) - 1.0) <= tol))


def dir_to_az_el(d: ArrayLike) -> Tuple[NDArray[np.float64], NDArray[np.float64]]:
    """Azimuth in [-pi, pi] and elevation in [-pi/2, pi/2] of unit directions."""
    arr = np.asarray(d, dtype=np.float64)
    az = np.arctan2(arr[..., 1], arr[..., 0])
    el = np.arcsin(np.clip(arr[..., 2], -1.0, 1.0))
    return az, el


def az_el_to_dir(az: ArrayLike, el: ArrayLike) -> Vec3:
    az_arr = np.asarray(az, dtype=np.float64)
    el_arr = np.asarray(el, dtype=np.float64)
    cos_el = np.cos(el_arr)
    return np.stack(
        [cos_el * np.cos(az_arr), cos_el * np.sin(az_arr), np.sin(el_arr)],
        axis=-1,
    )


@dataclass(frozen=True)
class RotationQ:
    """Unit quaternion ``w + xi + yj + zk``; rotations go through scipy."""

    w: float
    x: float
    y: float
    z: float

    def __post_init__(self):
        norm = math.sqrt(self.w ** 2 + self.x ** 2 + self.y ** 2 + self.z ** 2)
        if abs(norm - 1.0) > UNIT_TOLERANCE:
            raise ValueError(f"Quaternion norm {norm} is not 1")

    @classmethod
    def identity(cls) -> RotationQ:
        return cls(1.0, 0.0, 0.0, 0.0)

    @classmethod
    def from_components(cls, w: float, x: float, y: float, z: float) -> RotationQ:
        """Build a rotation from an arbitrary non-zero quaternion by normalizing it."""
        q = np.array([w, x, y, z], dtype=np.float64)
        norm = float(np.linalg.norm(q))
        if norm == 0.0:
            raise ValueError("Zero quaternion does not describe a rotation")
        q /= norm
        return cls(*(float(c) for c in q))

    @classmethod
    def from_axis_angle(cls, axis: ArrayLike, angle: float) -> RotationQ:
        return cls.from_scipy(Rotation.from_rotvec(unit_dir(axis) * angle))

    @classmethod
    def from_matrix(cls, matrix: ArrayLike) -> RotationQ:
        return cls.from_scipy(Rotation.from_matrix(np.asarray(matrix, dtype=np.float64)))

    @classmethod
    def from_scipy(cls, rotation: Rotation) -> RotationQ:
        x, y, z, w = rotation.as_quat()
        return cls.from_components(w, x, y, z)

    def as_scipy(self) -> Rotation:
        # scipy stores quaternions scalar-last
        return Rotation.from_quat([self.x, self.y, self.z, self.w])

    def as_array(self) -> NDArray[np.float64]:
        return np.array([self.w, self.x, self.y, self.z], dtype=np.float64)

    def to_matrix(self) -> NDArray[np.float64]:
        return self.as_scipy().as_matrix()

    def conjugate(self) -> RotationQ:
        return RotationQ(self.w, -self.x, -self.y, -self.z)

    def compose(self, other: RotationQ) -> RotationQ:
        """``self ∘ other``: apply ``other`` first, then ``self``."""
        return RotationQ.from_scipy(self.as_scipy() * other.as_scipy())

    def __mul__(self, other: RotationQ) -> RotationQ:
        return self.compose(other)

    def apply(self, v: ArrayLike) -> Vec3:
        return rotate(self, v)


def rotate(q: RotationQ, v: ArrayLike) -> Vec3:
    """Rotate one vector or a stack of vectors by ``q``."""
    arr = np.asarray(v, dtype=np.float64)
    flat = arr.reshape(-1, 3)
    return q.as_scipy().apply(flat).reshape(arr.shape)


@dataclass(frozen=True)
class SphericalGrid:
    """
    Equirectangular AoA grid. Row 0 is the top row (elevation +pi/2 edge),
    column 0 starts at azimuth -pi. Pixels are addressed at their bin centers.
    """

    n_el: int
    n_az: int

    def __post_init__(self):
        if int(self.n_el) < 1 or int(self.n_az) < 1:
            raise ValueError(f"Grid needs at least one bin per axis, got {self.n_el}x{self.n_az}")

    @property
    def shape(self) -> Tuple[int, int]:
        return (self.n_el, self.n_az)

    @property
    def size(self) -> int:
        return self.n_el * self.n_az

    @property
    def az_step(self) -> float:
        return 2.0 * math.pi / self.n_az

    @property
    def el_step(self) -> float:
        return math.pi / self.n_el

    def row_elevation(self, row: ArrayLike) -> NDArray[np.float64]:
        return math.pi / 2.0 - (np.asarray(row, dtype=np.float64) + 0.5) * self.el_step

    def col_azimuth(self, col: ArrayLike) -> NDArray[np.float64]:
        return -math.pi + (np.asarray(col, dtype=np.float64) + 0.5) * self.az_step

    def pixel_to_dir(self, row: int, col: int) -> Vec3:
        if not (0 <= row < self.n_el and 0 <= col < self.n_az):
            raise ValueError(f"Pixel ({row}, {col}) outside {self.n_el}x{self.n_az} grid")
        return az_el_to_dir(self.col_azimuth(col), self.row_elevation(row))

    def dirs_to_pixels(self, d: ArrayLike) -> Tuple[NDArray[np.int64], NDArray[np.int64]]:
        """Vectorized nearest-bin lookup; total for any non-zero direction."""
        az, el = dir_to_az_el(normalize(d))
        cols = np.floor((az + math.pi) / self.az_step).astype(np.int64) % self.n_az
        rows = np.clip(
            np.floor((math.pi / 2.0 - el) / self.el_step).astype(np.int64), 0, self.n_el - 1
        )
        return rows, cols

    def dir_to_pixel(self, d: ArrayLike) -> Tuple[int, int]:
        rows, cols = self.dirs_to_pixels(np.asarray(d, dtype=np.float64).reshape(1, 3))
        return int(rows[0]), int(cols[0])

    @cached_property
    def directions(self) -> Vec3:
        """Bin-center directions, shape ``(n_el, n_az, 3)``."""
        el = self.row_elevation(np.arange(self.n_el))[:, None]
        az = self.col_azimuth(np.arange(self.n_az))[None, :]
        return az_el_to_dir(np.broadcast_to(az, self.shape), np.broadcast_to(el, self.shape))
