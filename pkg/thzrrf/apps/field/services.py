"""
Seeding the Gaussian field from a scene mesh and evaluating primitives along rays.
"""
import logging
import math
from typing import Tuple

import numpy as np
from numpy.typing import ArrayLike, NDArray
from scipy.spatial.transform import Rotation

from thzrrf.apps.scenes.domain import Facet, Scene
from thzrrf.common.geometry import normalize
from thzrrf.common.harmonics import sh_basis, sh_coefficient_count

from .domain import GaussianField, GaussianPrimitive, SeedConfig

logger = logging.getLogger(__name__)

Y00 = 0.5 / math.sqrt(math.pi)
INSIDE_TOLERANCE = 1e-12
DEDUP_DECIMALS = 9


def _facet_lattice(facet: Facet, spacing: float) -> Tuple[NDArray[np.float64], NDArray[np.float64]]:
    """
    Lattice points inside a facet and the facet's in-plane rotation matrix ``[u, w, n]``.

    The lattice is anchored at the world origin with ``u`` taken from the world
    axis most orthogonal to the normal, so coplanar facets share one lattice.
    """
    n = facet.normal
    axis = np.eye(3)[int(np.argmin(np.abs(n)))]
    u = normalize(axis - (axis @ n) * n)
    w = np.cross(n, u)
    plane_offset = float(facet.vertices[0] @ n)

    a, b = facet.vertices @ u, facet.vertices @ w
    grid_a = spacing * (np.arange(math.ceil(a.min() / spacing - 0.5),
                                  math.floor(a.max() / spacing - 0.5) + 1) + 0.5)
    grid_b = spacing * (np.arange(math.ceil(b.min() / spacing - 0.5),
                                  math.floor(b.max() / spacing - 0.5) + 1) + 0.5)
    aa, bb = np.meshgrid(grid_a, grid_b, indexing='ij')
    pa, pb = aa.ravel() - a[0], bb.ravel() - b[0]

    # barycentric coordinates in the facet plane
    a1, a2 = a[1] - a[0], a[2] - a[0]
    b1, b2 = b[1] - b[0], b[2] - b[0]
    det = a1 * b2 - a2 * b1
    lam1 = (pa * b2 - pb * a2) / det
    lam2 = (a1 * pb - b1 * pa) / det
    inside = (lam1 >= -INSIDE_TOLERANCE) & (lam2 >= -INSIDE_TOLERANCE) & (lam1 + lam2 <= 1.0 + INSIDE_TOLERANCE)

    points = (plane_offset * n + np.outer(pa[inside] + a[0], u) + np.outer(pb[inside] + b[0], w))
    if len(points) == 0:
        points = facet.centroid[None, :]
    return points, np.column_stack([u, w, n])


def seed_from_scene(scene: Scene, cfg: SeedConfig) -> GaussianField:
    """
    Place flattened Gaussians on a square lattice in every facet plane.

    Each center lies on its facet, the thin axis follows the facet normal and the
    SH coefficients start at a constant decoded gain of ``cfg.init_gain``. With
    ``cfg.include_tx`` an isotropic Gaussian at the transmitter carries the
    line-of-sight path.
    """
    facets = [f for f in scene.facets if not f.is_degenerate]
    if len(facets) < len(scene.facets):
        logger.warning(f"Seeding skips {len(scene.facets) - len(facets)} degenerate facets")
    if not facets:
        raise ValueError("no facets")

    centers, frames = [], []
    for facet in facets:
        points, frame = _facet_lattice(facet, cfg.spacing)
        centers.append(points)
        frames.append(np.repeat(frame[None], len(points), axis=0))
    centers_arr = np.concatenate(centers)
    frames_arr = np.concatenate(frames)

    # points on a shared edge of neighbouring facets are emitted once
    _, first = np.unique(np.round(centers_arr, DEDUP_DECIMALS), axis=0, return_index=True)
    keep = np.sort(first)
    centers_arr, frames_arr = centers_arr[keep], frames_arr[keep]

    n_facet = len(centers_arr)
    scales = np.tile([cfg.init_scale, cfg.init_scale, cfg.init_scale * cfg.flatten_ratio], (n_facet, 1))
    quats = Rotation.from_matrix(frames_arr).as_quat()[:, [3, 0, 1, 2]]

    if cfg.include_tx:
        centers_arr = np.vstack([centers_arr, scene.tx_position])
        scales = np.vstack([scales, np.full(3, cfg.tx_scale)])
        quats = np.vstack([quats, [1.0, 0.0, 0.0, 0.0]])

    count = len(centers_arr)
    sh = np.zeros((count, sh_coefficient_count(cfg.sh_degree)))
    sh[:, 0] = math.log(cfg.init_gain) / Y00

    field = GaussianField(
        centers=centers_arr,
        scales=scales,
        rotations=quats,
        densities=np.full(count, cfg.init_density),
        sh=sh,
        tx_position=scene.tx_position.copy(),
        carrier_frequency=scene.carrier_frequency,
        sh_degree=cfg.sh_degree,
        metadata={
            'scene': scene.name,
            'spacing': cfg.spacing,
            'init_density': cfg.init_density,
            'init_scale': cfg.init_scale,
            'flatten_ratio': cfg.flatten_ratio,
            'init_gain': cfg.init_gain,
            'facet_gaussians': n_facet,
            'tx_gaussian': cfg.include_tx,
        },
    )
    logger.info(f"Seeded {count} Gaussians from {len(facets)} facets of '{scene.name}'")
    return field


def ray_closest_approach(inv_cov: NDArray[np.float64], centers: NDArray[np.float64],
                         origin: ArrayLike, direction: ArrayLike
                         ) -> Tuple[NDArray[np.float64], NDArray[np.float64]]:
    """
    Ray parameter of each Gaussian's density peak along the ray and the squared
    Mahalanobis distance at that point. Arguments broadcast over leading axes.
    """
    d = np.asarray(direction, dtype=np.float64)
    diff = centers - np.asarray(origin, dtype=np.float64)
    sd = np.einsum('...ij,...j->...i', inv_cov, d)
    denom = np.sum(d * sd, axis=-1)
    proj = np.sum(diff * sd, axis=-1)
    depth = proj / denom
    m2 = np.einsum('...i,...ij,...j->...', diff, inv_cov, diff) - proj * depth
    return depth, np.maximum(m2, 0.0)


def ray_terms(field: GaussianField, origin: ArrayLike, direction: ArrayLike
              ) -> Tuple[NDArray[np.float64], NDArray[np.float64]]:
    """
    Effective density and view depth of every primitive on one ray.

    Primitives whose peak lies behind the origin do not intersect the ray and
    get zero effective density.
    """
    depth, m2 = ray_closest_approach(field.inverse_covariances, field.centers, origin, direction)
    alpha = np.where(depth > 0.0, field.densities * np.exp(-0.5 * m2), 0.0)
    return alpha, depth


def effective_density(g: GaussianPrimitive, origin: ArrayLike, direction: ArrayLike) -> float:
    """``alpha_g * exp(-m^2 / 2)`` at the ray's closest approach to the Gaussian."""
    depth, m2 = ray_closest_approach(g.inverse_covariance(), g.center, origin, direction)
    if depth <= 0.0:
        return 0.0
    return float(g.density * math.exp(-0.5 * float(m2)))


def decoded_gain(g: GaussianPrimitive, d: ArrayLike) -> float:
    return float(np.exp(g.gain_sh @ sh_basis(g.sh_degree, d)))


def decoded_gains(sh: NDArray[np.float64], basis: NDArray[np.float64]) -> NDArray[np.float64]:
    """Row-wise ``exp(sh_k . basis_k)`` for stacks of coefficient and basis rows."""
    return np.exp(np.sum(sh * basis, axis=-1))
