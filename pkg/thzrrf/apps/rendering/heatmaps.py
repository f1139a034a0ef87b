"""
PNG heatmaps of spectrum channels: path gain in dB, ToF in ns, AoD azimuth in degrees.
Miss pixels are drawn black.
"""
import io
import logging
from pathlib import Path
from typing import Dict, Optional

import numpy as np
from django.conf import settings
from matplotlib import colormaps
from numpy.typing import NDArray
from PIL import Image

from thzrrf.apps.evaluation.metrics import db_image
from thzrrf.apps.scenes.domain import SpatialSpectrum
from thzrrf.common.storage import atomic_write_bytes

logger = logging.getLogger(__name__)

AOD_COLORMAP = 'twilight'
PIXEL_SCALE = 4  # output pixels per grid bin


def colorize(values: NDArray[np.float64], lo: float, hi: float, colormap: str,
             mask: Optional[NDArray[np.bool_]] = None) -> Image.Image:
    span = hi - lo if hi > lo else 1.0
    normalized = np.clip((values - lo) / span, 0.0, 1.0)
    rgb = colormaps[colormap](normalized, bytes=True)[..., :3]
    if mask is not None:
        rgb[~mask] = 0
    image = Image.fromarray(np.ascontiguousarray(rgb))
    if PIXEL_SCALE > 1:
        image = image.resize((image.width * PIXEL_SCALE, image.height * PIXEL_SCALE), Image.Resampling.NEAREST)
    return image


def _png_bytes(image: Image.Image) -> bytes:
    buffer = io.BytesIO()
    image.save(buffer, format='PNG')
    return buffer.getvalue()


def heatmap_images(spectrum: SpatialSpectrum, floor: Optional[float] = None,
                   ceiling: Optional[float] = None,
                   colormap: Optional[str] = None) -> Dict[str, Image.Image]:
    lo = settings.THZ_DB_FLOOR if floor is None else floor
    hi = settings.THZ_DB_CEILING if ceiling is None else ceiling
    cmap = colormap or settings.THZ_HEATMAP_COLORMAP
    hit = spectrum.hit_mask

    tof_ns = spectrum.tof * 1e9
    tof_hi = float(tof_ns[hit].max()) if hit.any() else 1.0
    return {
        'gain_db': colorize(db_image(spectrum.path_gain, lo, hi), lo, hi, cmap),
        'tof_ns': colorize(tof_ns, 0.0, tof_hi, cmap, hit),
        'aod_az_deg': colorize(np.degrees(spectrum.aod_az), -180.0, 180.0, AOD_COLORMAP, hit),
    }


def write_heatmaps(spectrum: SpatialSpectrum, out_dir: Path, stem: str,
                   floor: Optional[float] = None, ceiling: Optional[float] = None,
                   colormap: Optional[str] = None) -> Dict[str, Path]:
    """Write ``<stem>_<channel>.png`` for each channel and return the paths by channel."""
    paths = {}
    for channel, image in heatmap_images(spectrum, floor, ceiling, colormap).items():
        paths[channel] = atomic_write_bytes(Path(out_dir) / f"{stem}_{channel}.png", _png_bytes(image))
    logger.debug(f"Wrote {len(paths)} heatmaps for {stem} to {out_dir}")
    return paths
