"""
Real spherical-harmonic basis built on scipy's complex harmonics.

Basis values are returned in ``(l, m)`` lexicographic order,
``m = -l .. l`` inside each band, and are orthonormal over the unit sphere.
"""
from __future__ import annotations

import math

import numpy as np
from numpy.typing import ArrayLike, NDArray
from scipy.special import sph_harm_y

MAX_SH_DEGREE = 4


def sh_coefficient_count(degree: int) -> int:
    return (degree + 1) ** 2


def _check_degree(degree: int) -> int:
    if isinstance(degree, bool) or int(degree) != degree or not 0 <= degree <= MAX_SH_DEGREE:
        raise ValueError(f"SH degree must be an integer in [0, {MAX_SH_DEGREE}], got {degree!r}")
    return int(degree)


def sh_basis(degree: int, d: ArrayLike) -> NDArray[np.float64]:
    """
    Evaluate the real SH basis up to ``degree`` at unit direction(s) ``d``.

    Args:
        degree: Maximum band, 0..4.
        d: Unit direction of shape ``(3,)`` or a stack ``(..., 3)``.

    Returns:
        Array of shape ``(..., (degree+1)**2)``.
    """
    degree = _check_degree(degree)
    dirs = np.asarray(d, dtype=np.float64)
    theta = np.arccos(np.clip(dirs[..., 2], -1.0, 1.0))
    phi = np.arctan2(dirs[..., 1], dirs[..., 0])

    out = np.empty(dirs.shape[:-1] + (sh_coefficient_count(degree),), dtype=np.float64)
    for l in range(degree + 1):
        center = l * l + l
        out[..., center] = sph_harm_y(l, 0, theta, phi).real
        for m in range(1, l + 1):
            y = sph_harm_y(l, m, theta, phi)
            sign = -1.0 if m % 2 else 1.0
            out[..., center + m] = math.sqrt(2.0) * sign * y.real
            out[..., center - m] = math.sqrt(2.0) * sign * y.imag
    return out
