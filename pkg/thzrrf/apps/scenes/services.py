"""
Ground-truth channel simulation: line-of-sight plus single-bounce directive
scattering off facet sample points, binned into receiver-side spatial spectra.
"""
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from typing import List, Optional

import numpy as np
from django.conf import settings
from numpy.typing import ArrayLike, NDArray
from scipy.constants import speed_of_light

from thzrrf.common.geometry import RotationQ, SphericalGrid, dir_to_az_el, normalize

from .domain import Dataset, Facet, Material, Mpc, Sample, Scene, SpatialSpectrum

logger = logging.getLogger(__name__)

SEGMENT_EPS = 1e-9
DETERMINANT_EPS = 1e-14


def free_space_gain(wavelength: float, distance: ArrayLike) -> NDArray[np.float64]:
    """Friis power factor ``(lambda / (4 pi d))^2``."""
    d = np.asarray(distance, dtype=np.float64)
    return (wavelength / (4.0 * math.pi * d)) ** 2


def delay_phase(carrier_frequency: float, delay: ArrayLike) -> NDArray[np.float64]:
    """Delay-induced phase ``(-2 pi f_c tau) mod 2 pi`` in ``[0, 2 pi)``."""
    phase = np.mod(-2.0 * math.pi * carrier_frequency * np.asarray(delay, dtype=np.float64),
                   2.0 * math.pi)
    return np.where(phase >= 2.0 * math.pi, 0.0, phase)


def facet_sample_points(facet: Facet, density: float) -> NDArray[np.float64]:
    """
    Scatter sample points of a facet: centroids of an ``n x n`` barycentric
    subdivision with ``n = ceil(sqrt(density * area))``, giving ``n^2`` points.
    """
    n = max(1, math.ceil(math.sqrt(density * facet.area)))
    coords = []
    for i in range(n):
        for j in range(n - i):
            coords.append(((i + 1.0 / 3.0) / n, (j + 1.0 / 3.0) / n))
            if i + j <= n - 2:
                coords.append(((i + 2.0 / 3.0) / n, (j + 2.0 / 3.0) / n))
    bary = np.asarray(coords, dtype=np.float64)
    v0, v1, v2 = facet.vertices
    return v0 + bary[:, :1] * (v1 - v0) + bary[:, 1:] * (v2 - v0)


def segments_blocked(starts: ArrayLike, ends: ArrayLike, triangles: NDArray[np.float64],
                     exclude: Optional[NDArray[np.int64]] = None) -> NDArray[np.bool_]:
    """
    Vectorized Moller-Trumbore test of segments against triangles.

    Args:
        starts: Segment start points ``(S, 3)`` or one shared point ``(3,)``.
        ends: Segment end points ``(S, 3)``.
        triangles: Occluders ``(T, 3, 3)``.
        exclude: Optional per-segment triangle index ignored for that segment
            (the facet a bounce point lies on).

    Returns:
        ``(S,)`` mask of segments crossing any triangle strictly between their ends.
    """
    b = np.atleast_2d(np.asarray(ends, dtype=np.float64))
    a = np.broadcast_to(np.asarray(starts, dtype=np.float64), b.shape)
    if len(triangles) == 0 or len(b) == 0:
        return np.zeros(len(b), dtype=bool)

    v0 = triangles[None, :, 0, :]
    e1 = triangles[None, :, 1, :] - v0
    e2 = triangles[None, :, 2, :] - v0
    direction = (b - a)[:, None, :]

    pvec = np.cross(direction, e2)
    det = np.sum(e1 * pvec, axis=-1)
    valid = np.abs(det) > DETERMINANT_EPS
    inv_det = np.divide(1.0, det, out=np.zeros_like(det), where=valid)

    tvec = a[:, None, :] - v0
    u = np.sum(tvec * pvec, axis=-1) * inv_det
    qvec = np.cross(tvec, e1)
    v = np.sum(direction * qvec, axis=-1) * inv_det
    t = np.sum(e2 * qvec, axis=-1) * inv_det

    hit = valid & (u >= 0.0) & (v >= 0.0) & (u + v <= 1.0) & (t > SEGMENT_EPS) & (t < 1.0 - SEGMENT_EPS)
    if exclude is not None:
        hit[np.arange(len(b)), np.asarray(exclude)] = False
    return hit.any(axis=1)


def scattering_gain_array(scattering: ArrayLike, lobe: ArrayLike, reduction: ArrayLike,
                          incident: ArrayLike, outgoing: ArrayLike,
                          normal: ArrayLike) -> NDArray[np.float64]:
    """Directive-lobe gain for stacks of interactions; material parameters broadcast."""
    inc = np.asarray(incident, dtype=np.float64)
    out = np.asarray(outgoing, dtype=np.float64)
    n = np.asarray(normal, dtype=np.float64)

    cos_in = np.sum(inc * n, axis=-1)
    cos_out = np.sum(out * n, axis=-1)
    specular = inc - 2.0 * np.expand_dims(cos_in, -1) * n
    cos_psi = np.clip(np.sum(out * specular, axis=-1), -1.0, 1.0)
    lobe_term = ((1.0 + cos_psi) / 2.0) ** np.asarray(lobe, dtype=np.float64)
    gain = np.asarray(reduction) * np.asarray(scattering) ** 2 * lobe_term * (-cos_in)
    return np.where((cos_out < 0.0) | (cos_in >= 0.0), 0.0, np.clip(gain, 0.0, 1.0))


def scattering_gain(material: Material, incident: ArrayLike, outgoing: ArrayLike,
                    normal: ArrayLike) -> float:
    """
    Power gain of one scattering interaction.

    ``incident`` points from the source towards the surface, ``outgoing`` from the
    surface towards the observer. Outgoing directions below the surface or
    incidence from behind give zero gain.
    """
    return float(scattering_gain_array(
        material.scattering_coefficient, material.lobe_exponent, material.reflection_reduction,
        incident, outgoing, normal,
    ))


class SceneTracer:
    """
    Per-scene precomputation for repeated tracing: valid facets, their scatter
    sample points and the Tx-side visibility of every point.
    """

    def __init__(self, scene: Scene):
        self.scene = scene
        self.wavelength = scene.wavelength

        facets: List[Facet] = []
        for index, facet in enumerate(scene.facets):
            if facet.is_degenerate:
                logger.warning(f"Skipping degenerate facet {index} (area {facet.area:.3e} m^2)")
                continue
            facets.append(facet)
        self.facets = facets
        self.triangles = (np.stack([f.vertices for f in facets])
                          if facets else np.zeros((0, 3, 3), dtype=np.float64))

        points, owners = [], []
        for j, facet in enumerate(facets):
            pts = facet_sample_points(facet, scene.facet_sampling_density)
            points.append(pts)
            owners.append(np.full(len(pts), j, dtype=np.int64))
        self.points = np.concatenate(points) if points else np.zeros((0, 3))
        self.owners = np.concatenate(owners) if owners else np.zeros(0, dtype=np.int64)

        self.normals = np.array([f.normal for f in facets]).reshape(-1, 3)[self.owners]
        materials = [scene.materials[f.material] for f in facets]
        self.scattering = np.array([m.scattering_coefficient for m in materials])[self.owners] \
            if materials else np.zeros(0)
        self.lobe = np.array([m.lobe_exponent for m in materials], dtype=np.float64)[self.owners] \
            if materials else np.zeros(0)
        self.reduction = np.array([m.reflection_reduction for m in materials])[self.owners] \
            if materials else np.zeros(0)

        tx = scene.tx_position
        to_point = self.points - tx
        self.tx_distance = np.linalg.norm(to_point, axis=-1)
        self.incident = normalize(to_point)
        front = np.sum((tx - self.points) * self.normals, axis=-1) > 0.0
        blocked = segments_blocked(tx, self.points, self.triangles, exclude=self.owners)
        self.tx_visible = front & ~blocked & (self.tx_distance > 0.0)
        logger.debug(
            f"Tracer for '{scene.name}': {len(facets)} facets, {len(self.points)} scatter points, "
            f"{int(self.tx_visible.sum())} visible from Tx"
        )

    def los(self, rx: NDArray[np.float64]) -> Optional[Mpc]:
        tx = self.scene.tx_position
        d = float(np.linalg.norm(rx - tx))
        if d == 0.0 or segments_blocked(tx, rx[None, :], self.triangles)[0]:
            return None
        delay = d / speed_of_light
        return Mpc(
            amplitude=float(free_space_gain(self.wavelength, d)),
            phase=float(delay_phase(self.scene.carrier_frequency, delay)),
            delay=delay,
            aoa=normalize(tx - rx),
            aod=normalize(rx - tx),
        )

    def scattered(self, rx: NDArray[np.float64]) -> List[Mpc]:
        idx = np.flatnonzero(self.tx_visible)
        if idx.size == 0:
            return []
        points = self.points[idx]
        normals = self.normals[idx]
        to_rx = rx - points
        rx_distance = np.linalg.norm(to_rx, axis=-1)
        front = (np.sum(to_rx * normals, axis=-1) > 0.0) & (rx_distance > 0.0)
        idx, points, normals = idx[front], points[front], normals[front]
        to_rx, rx_distance = to_rx[front], rx_distance[front]

        blocked = segments_blocked(points, np.broadcast_to(rx, points.shape), self.triangles,
                                   exclude=self.owners[idx])
        keep = ~blocked
        idx, points, normals = idx[keep], points[keep], normals[keep]
        outgoing = to_rx[keep] / rx_distance[keep, None]
        rx_distance = rx_distance[keep]

        gain = scattering_gain_array(self.scattering[idx], self.lobe[idx], self.reduction[idx],
                                     self.incident[idx], outgoing, normals)
        total = self.tx_distance[idx] + rx_distance
        amplitude = gain * free_space_gain(self.wavelength, total)
        delay = total / speed_of_light
        phase = delay_phase(self.scene.carrier_frequency, delay)

        mpcs = []
        for k in np.flatnonzero(amplitude > 0.0):
            mpcs.append(Mpc(
                amplitude=float(amplitude[k]),
                phase=float(phase[k]),
                delay=float(delay[k]),
                aoa=-outgoing[k],
                aod=self.incident[idx[k]],
                bounce_point=points[k].copy(),
            ))
        return mpcs

    def trace(self, rx: ArrayLike) -> List[Mpc]:
        position = np.asarray(rx, dtype=np.float64).reshape(3)
        mpcs = []
        los = self.los(position)
        if los is not None:
            mpcs.append(los)
        mpcs.extend(self.scattered(position))
        return mpcs


def trace(scene: Scene, rx: ArrayLike) -> List[Mpc]:
    """LoS MPC (when unoccluded) followed by scattered MPCs in sample-point order."""
    return SceneTracer(scene).trace(rx)


def spectrum_from_mpcs(mpcs: List[Mpc], grid: SphericalGrid,
                       rx_orientation: Optional[RotationQ] = None,
                       rx_position: Optional[ArrayLike] = None) -> SpatialSpectrum:
    """Bin MPCs by AoA in the Rx frame; the strongest MPC of each pixel wins."""
    orientation = rx_orientation or RotationQ.identity()
    position = np.zeros(3) if rx_position is None else rx_position
    spectrum = SpatialSpectrum.empty(grid, position, orientation)
    if not mpcs:
        return spectrum

    amplitude = np.array([m.amplitude for m in mpcs])
    aoa_local = orientation.conjugate().apply(np.array([m.aoa for m in mpcs]))
    rows, cols = grid.dirs_to_pixels(aoa_local)
    flat = rows * grid.n_az + cols

    order = np.argsort(-amplitude, kind='stable')
    _, first = np.unique(flat[order], return_index=True)
    winners = order[first]

    aod_az, aod_el = dir_to_az_el(np.array([mpcs[k].aod for k in winners]))
    r, c = rows[winners], cols[winners]
    spectrum.path_gain[r, c] = amplitude[winners]
    spectrum.tof[r, c] = [mpcs[k].delay for k in winners]
    spectrum.aod_az[r, c] = aod_az
    spectrum.aod_el[r, c] = aod_el
    return spectrum


def generate_dataset(scene: Scene, n_rx: int, grid: SphericalGrid, rng_seed: int,
                     threads: Optional[int] = None,
                     rx_orientation: Optional[RotationQ] = None,
                     scene_digest: str = '') -> Dataset:
    """
    Draw ``n_rx`` receiver positions uniformly from the scene's sampling volume
    and simulate each one. Samples are returned in draw order regardless of the
    number of worker threads.
    """
    if n_rx < 0:
        raise ValueError(f"n_rx must be non-negative, got {n_rx}")
    if scene.sampling_volume is None:
        raise ValueError(f"Scene '{scene.name}' declares no sampling volume")
    orientation = rx_orientation or RotationQ.identity()

    rng = np.random.default_rng(rng_seed)
    volume = scene.sampling_volume
    positions = rng.uniform(volume.min_corner, volume.max_corner, size=(n_rx, 3))

    tracer = SceneTracer(scene)

    def simulate(index: int) -> Sample:
        mpcs = tracer.trace(positions[index])
        spectrum = spectrum_from_mpcs(mpcs, grid, orientation, positions[index])
        return Sample(index=index, spectrum=spectrum, mpcs=mpcs)

    workers = threads or settings.THZ_THREADS
    with ThreadPoolExecutor(max_workers=workers) as executor:
        samples = list(executor.map(simulate, range(n_rx)))

    logger.info(f"Generated {n_rx} samples for scene '{scene.name}' (seed {rng_seed}, {workers} threads)")
    return Dataset(
        grid=grid,
        carrier_frequency=scene.carrier_frequency,
        tx_position=scene.tx_position.copy(),
        samples=samples,
        rng_seed=rng_seed,
        scene_digest=scene_digest,
    )
