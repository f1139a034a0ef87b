"""
Spatial-spectrum rendering from a Gaussian field.

Every pixel of the receiver's AoA grid casts a ray from the receiver. Gaussians
met along it are alpha-blended in view-depth order; the Gaussian with the
largest ``alpha * T`` is the pseudo-surface point that fixes the prior path
length, ToF and AoD of the pixel.
"""
import logging
from concurrent.futures import ThreadPoolExecutor
from typing import List, Optional, Sequence, Tuple

import numpy as np
from django.conf import settings
from numpy.typing import ArrayLike, NDArray
from scipy.constants import speed_of_light

from thzrrf.apps.field.domain import GaussianField
from thzrrf.apps.field.services import decoded_gains, ray_closest_approach, ray_terms
from thzrrf.apps.scenes.domain import SpatialSpectrum
from thzrrf.apps.scenes.services import free_space_gain
from thzrrf.common.geometry import RotationQ, SphericalGrid, dir_to_az_el, normalize
from thzrrf.common.harmonics import sh_basis

from .domain import BlendCache, PathContext, RayBlendTerm, RayRender
from .enums import RenderMode

logger = logging.getLogger(__name__)

PIXEL_CHUNK = 512
CONE_SLACK = 1e-9


def _cutoffs(density_cutoff: Optional[float], transmittance_cutoff: Optional[float]) -> Tuple[float, float]:
    return (
        settings.THZ_DENSITY_CUTOFF if density_cutoff is None else density_cutoff,
        settings.THZ_TRANSMITTANCE_CUTOFF if transmittance_cutoff is None else transmittance_cutoff,
    )


def _check_calibration(field: GaussianField, mode: RenderMode,
                       calibration: Optional[NDArray[np.float64]]) -> None:
    if mode == RenderMode.LEGACY:
        if calibration is None:
            raise ValueError("Legacy rendering needs a calibration table")
        if len(calibration) != len(field):
            raise ValueError(f"Calibration has {len(calibration)} depths for {len(field)} Gaussians")


def blend_ray(field: GaussianField, origin: ArrayLike, direction: ArrayLike,
              density_cutoff: Optional[float] = None,
              transmittance_cutoff: Optional[float] = None
              ) -> Tuple[NDArray[np.int64], NDArray[np.float64], NDArray[np.float64], NDArray[np.float64]]:
    """
    Depth-ordered blend of one ray marched from ``origin`` along ``direction``.

    Returns Gaussian indices, effective densities, transmittances and view
    depths of the terms kept after the density and transmittance cutoffs.
    """
    alpha_cut, t_cut = _cutoffs(density_cutoff, transmittance_cutoff)
    empty = np.zeros(0)
    if len(field) == 0:
        return np.zeros(0, dtype=np.int64), empty, empty, empty
    alpha, depth = ray_terms(field, origin, direction)
    idx = np.flatnonzero(alpha >= alpha_cut)
    order = idx[np.lexsort((idx, depth[idx]))]
    a = alpha[order]
    transmittance = np.exp(-(np.cumsum(a) - a))
    keep = transmittance >= t_cut
    return order[keep], a[keep], transmittance[keep], depth[order][keep]


def _path_context(field: GaussianField, tx: Optional[ArrayLike], gaussians: NDArray[np.int64],
                  alpha: NDArray[np.float64], transmittance: NDArray[np.float64],
                  depth: NDArray[np.float64]) -> Optional[PathContext]:
    if len(gaussians) == 0:
        return None
    k = int(np.argmax(alpha * transmittance))  # first maximum is the nearest
    tx_position = field.tx_position if tx is None else np.asarray(tx, dtype=np.float64)
    point = field.centers[gaussians[k]]
    return PathContext(
        pseudo_surface_point=point.copy(),
        l_prev=float(np.linalg.norm(point - tx_position)),
        aod=normalize(point - tx_position),
        cumulative_gain=1.0,
        dominant_gaussian_index=int(gaussians[k]),
        dominant_view_depth=float(depth[k]),
    )


def pseudo_surface(field: GaussianField, origin: ArrayLike, direction: ArrayLike,
                   tx: Optional[ArrayLike] = None,
                   density_cutoff: Optional[float] = None,
                   transmittance_cutoff: Optional[float] = None) -> Optional[PathContext]:
    """Path context from the ray's largest ``alpha * T`` Gaussian; ``None`` on a miss."""
    return _path_context(field, tx, *blend_ray(field, origin, direction, density_cutoff, transmittance_cutoff))


def render_ray_terms(field: GaussianField, tx: ArrayLike, rx: ArrayLike, d_render: ArrayLike,
                     mode: RenderMode = RenderMode.FULL_PATH,
                     calibration: Optional[NDArray[np.float64]] = None,
                     density_cutoff: Optional[float] = None,
                     transmittance_cutoff: Optional[float] = None
                     ) -> Tuple[RayRender, List[RayBlendTerm]]:
    """
    Render one ray and return the blend terms with it.

    ``d_render`` is the direction radiance leaves the Gaussians towards the
    receiver; the ray is marched from ``rx`` along ``-d_render``.
    """
    _check_calibration(field, mode, calibration)
    d = normalize(d_render)
    origin = np.asarray(rx, dtype=np.float64)
    gaussians, alpha, transmittance, depth = blend_ray(
        field, origin, -d, density_cutoff, transmittance_cutoff)
    context = _path_context(field, tx, gaussians, alpha, transmittance, depth)
    if context is None:
        return RayRender.miss(), []

    lengths = depth if mode == RenderMode.FULL_PATH else calibration[gaussians]
    dominant_length = (context.dominant_view_depth if mode == RenderMode.FULL_PATH
                       else float(calibration[context.dominant_gaussian_index]))

    a_n = decoded_gains(field.sh[gaussians], sh_basis(field.sh_degree, d)[None, :])
    p = context.cumulative_gain * a_n * free_space_gain(field.wavelength, context.l_prev + lengths)
    terms = [
        RayBlendTerm(int(g), float(a), float(t), float(l), float(pk))
        for g, a, t, l, pk in zip(gaussians, alpha, transmittance, depth, p)
    ]
    result = RayRender(
        path_gain=float(np.sum(alpha * transmittance * p)),
        tof=(context.l_prev + dominant_length) / speed_of_light,
        aod=context.aod,
        context=context,
    )
    return result, terms


def render_ray(field: GaussianField, tx: ArrayLike, rx: ArrayLike, d_render: ArrayLike,
               mode: RenderMode = RenderMode.FULL_PATH,
               calibration: Optional[NDArray[np.float64]] = None,
               density_cutoff: Optional[float] = None,
               transmittance_cutoff: Optional[float] = None) -> RayRender:
    result, _ = render_ray_terms(field, tx, rx, d_render, mode, calibration,
                                 density_cutoff, transmittance_cutoff)
    return result


def render_spectrum_oracle(field: GaussianField, rx_position: ArrayLike,
                           rx_orientation: Optional[RotationQ], grid: SphericalGrid,
                           mode: RenderMode = RenderMode.FULL_PATH,
                           calibration: Optional[NDArray[np.float64]] = None,
                           density_cutoff: Optional[float] = None,
                           transmittance_cutoff: Optional[float] = None) -> SpatialSpectrum:
    """Reference renderer: one independent ``render_ray`` per pixel, no culling."""
    orientation = rx_orientation or RotationQ.identity()
    spectrum = SpatialSpectrum.empty(grid, rx_position, orientation)
    view_dirs = orientation.apply(grid.directions)
    for row in range(grid.n_el):
        for col in range(grid.n_az):
            ray = render_ray(field, field.tx_position, spectrum.rx_position, -view_dirs[row, col],
                             mode, calibration, density_cutoff, transmittance_cutoff)
            if ray.is_miss:
                continue
            az, el = dir_to_az_el(ray.aod)
            spectrum.path_gain[row, col] = ray.path_gain
            spectrum.tof[row, col] = ray.tof
            spectrum.aod_az[row, col] = az
            spectrum.aod_el[row, col] = el
    return spectrum


def _candidate_pairs(field: GaussianField, rx: NDArray[np.float64], view_dirs: NDArray[np.float64],
                     alpha_cut: float) -> Tuple[NDArray[np.int64], NDArray[np.int64]]:
    """
    Conservative (pixel, Gaussian) pairs whose effective density can reach the
    cutoff: the ray must pass within ``sigma_max * sqrt(2 ln(alpha_g / cutoff))``
    of the center.
    """
    with np.errstate(divide='ignore'):
        ratio = np.log(np.maximum(field.densities, 1e-300) / alpha_cut)
    reach = np.where(field.densities >= alpha_cut,
                     field.scales.max(axis=1) * np.sqrt(2.0 * np.maximum(ratio, 0.0)) * (1.0 + CONE_SLACK),
                     -1.0)
    offsets = field.centers - rx
    dist = np.linalg.norm(offsets, axis=1)
    toward = normalize(offsets)
    inside = (reach >= 0.0) & (dist <= reach)
    cos_min = np.where(dist > reach, np.sqrt(np.clip(1.0 - (reach / np.maximum(dist, 1e-300)) ** 2, 0.0, 1.0)), -2.0)
    cos_min = np.where(reach < 0.0, 2.0, cos_min)

    pixels, gaussians = [], []
    for start in range(0, len(view_dirs), PIXEL_CHUNK):
        block = view_dirs[start:start + PIXEL_CHUNK]
        cosines = block @ toward.T
        mask = (cosines >= cos_min[None, :] - CONE_SLACK) | inside[None, :]
        p, g = np.nonzero(mask)
        pixels.append(p + start)
        gaussians.append(g)
    return np.concatenate(pixels), np.concatenate(gaussians)


def build_blend_cache(field: GaussianField, rx_position: ArrayLike,
                      rx_orientation: Optional[RotationQ], grid: SphericalGrid,
                      density_cutoff: Optional[float] = None,
                      transmittance_cutoff: Optional[float] = None) -> BlendCache:
    """
    Splatted geometry pass for one pose: cull by cone, evaluate closest
    approach on candidate pairs, sort by (pixel, depth) and blend every pixel's
    run at once with a grouped exclusive cumulative sum.
    """
    alpha_cut, t_cut = _cutoffs(density_cutoff, transmittance_cutoff)
    orientation = rx_orientation or RotationQ.identity()
    rx = np.asarray(rx_position, dtype=np.float64).reshape(3)
    n_pix = grid.size
    view_dirs = orientation.apply(grid.directions.reshape(n_pix, 3))

    if len(field):
        pix, gid = _candidate_pairs(field, rx, view_dirs, alpha_cut)
    else:
        pix = gid = np.zeros(0, dtype=np.int64)
    depth, m2 = ray_closest_approach(field.inverse_covariances[gid], field.centers[gid], rx, view_dirs[pix])
    alpha = np.where(depth > 0.0, field.densities[gid] * np.exp(-0.5 * m2), 0.0)
    keep = alpha >= alpha_cut
    pix, gid, alpha, depth = pix[keep], gid[keep], alpha[keep], depth[keep]

    order = np.lexsort((gid, depth, pix))
    pix, gid, alpha, depth = pix[order], gid[order], alpha[order], depth[order]

    starts = np.flatnonzero(np.r_[True, pix[1:] != pix[:-1]]) if len(pix) else np.zeros(0, dtype=np.int64)
    group = np.cumsum(np.r_[True, pix[1:] != pix[:-1]]) - 1 if len(pix) else np.zeros(0, dtype=np.int64)
    before = np.cumsum(alpha) - alpha
    transmittance = np.exp(-(before - before[starts][group]))
    keep = transmittance >= t_cut
    pix, gid, alpha, depth, transmittance = (pix[keep], gid[keep], alpha[keep],
                                             depth[keep], transmittance[keep])
    weight = alpha * transmittance

    dominant = np.full(n_pix, -1, dtype=np.int64)
    dominant_depth = np.zeros(n_pix)
    if len(pix):
        position = np.arange(len(pix))
        ranked = np.lexsort((position, -weight, pix))
        first = ranked[np.r_[True, pix[ranked][1:] != pix[ranked][:-1]]]
        dominant[pix[first]] = gid[first]
        dominant_depth[pix[first]] = depth[first]

    hit = dominant >= 0
    l_prev = np.zeros(n_pix)
    aod_az = np.zeros(n_pix)
    aod_el = np.zeros(n_pix)
    if hit.any():
        outward = field.centers[dominant[hit]] - field.tx_position
        l_prev[hit] = np.linalg.norm(outward, axis=1)
        aod_az[hit], aod_el[hit] = dir_to_az_el(normalize(outward))

    return BlendCache(
        grid=grid,
        rx_position=rx,
        rx_orientation=orientation,
        wavelength=field.wavelength,
        pixel=pix,
        gaussian=gid,
        weight=weight,
        depth=depth,
        basis=sh_basis(field.sh_degree, -view_dirs),
        dominant=dominant,
        dominant_depth=dominant_depth,
        l_prev=l_prev,
        aod_az=aod_az,
        aod_el=aod_el,
    )


def term_lengths(cache: BlendCache, mode: RenderMode,
                 calibration: Optional[NDArray[np.float64]] = None) -> NDArray[np.float64]:
    """Per-term ``l_prev + l`` with ``l`` the view depth or the calibrated depth."""
    if mode == RenderMode.FULL_PATH:
        return cache.l_prev[cache.pixel] + cache.depth
    if calibration is None:
        raise ValueError("Legacy rendering needs a calibration table")
    return cache.l_prev[cache.pixel] + calibration[cache.gaussian]


def spectrum_from_cache(cache: BlendCache, sh: NDArray[np.float64],
                        mode: RenderMode = RenderMode.FULL_PATH,
                        calibration: Optional[NDArray[np.float64]] = None) -> SpatialSpectrum:
    grid = cache.grid
    lengths = term_lengths(cache, mode, calibration)
    a_n = decoded_gains(sh[cache.gaussian], cache.basis[cache.pixel])
    contribution = cache.weight * a_n * free_space_gain(cache.wavelength, lengths)
    gain = np.bincount(cache.pixel, weights=contribution, minlength=grid.size)

    hit = cache.hit_pixels
    dominant_length = np.zeros(grid.size)
    if mode == RenderMode.FULL_PATH:
        dominant_length[hit] = cache.dominant_depth[hit]
    else:
        dominant_length[hit] = calibration[cache.dominant[hit]]
    tof = np.where(hit, (cache.l_prev + dominant_length) / speed_of_light, 0.0)

    return SpatialSpectrum(
        grid=grid,
        path_gain=gain.reshape(grid.shape),
        tof=tof.reshape(grid.shape),
        aod_az=cache.aod_az.reshape(grid.shape),
        aod_el=cache.aod_el.reshape(grid.shape),
        rx_position=cache.rx_position,
        rx_orientation=cache.rx_orientation,
    )


def render_spectrum(field: GaussianField, rx_position: ArrayLike,
                    rx_orientation: Optional[RotationQ], grid: SphericalGrid,
                    mode: RenderMode = RenderMode.FULL_PATH,
                    calibration: Optional[NDArray[np.float64]] = None,
                    density_cutoff: Optional[float] = None,
                    transmittance_cutoff: Optional[float] = None) -> SpatialSpectrum:
    _check_calibration(field, mode, calibration)
    cache = build_blend_cache(field, rx_position, rx_orientation, grid,
                              density_cutoff, transmittance_cutoff)
    return spectrum_from_cache(cache, field.sh, mode, calibration)


def render_spectra(field: GaussianField, poses: Sequence[Tuple[ArrayLike, RotationQ]],
                   grid: SphericalGrid, mode: RenderMode = RenderMode.FULL_PATH,
                   calibration: Optional[NDArray[np.float64]] = None,
                   threads: Optional[int] = None) -> List[SpatialSpectrum]:
    """Render many poses on a thread pool; output order follows ``poses``."""
    _check_calibration(field, mode, calibration)
    workers = threads or settings.THZ_THREADS

    def render(pose: Tuple[ArrayLike, RotationQ]) -> SpatialSpectrum:
        return render_spectrum(field, pose[0], pose[1], grid, mode, calibration)

    with ThreadPoolExecutor(max_workers=workers) as executor:
        spectra = list(executor.map(render, poses))
    logger.debug(f"Rendered {len(spectra)} spectra in {mode} mode on {workers} threads")
    return spectra


def build_blend_caches(field: GaussianField, poses: Sequence[Tuple[ArrayLike, RotationQ]],
                       grid: SphericalGrid, threads: Optional[int] = None) -> List[BlendCache]:
    workers = threads or settings.THZ_THREADS
    with ThreadPoolExecutor(max_workers=workers) as executor:
        return list(executor.map(lambda pose: build_blend_cache(field, pose[0], pose[1], grid), poses))

