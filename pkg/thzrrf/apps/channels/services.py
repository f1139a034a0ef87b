"""
Multipath channel synthesis: tapped impulse responses under a channelization and
strongest-beam selection on spatial spectra.
"""
import logging
import math
from typing import List, Optional, Sequence

import numpy as np

from thzrrf.apps.scenes.domain import Mpc, SpatialSpectrum

from .domain import Beam, Channelization, Cir

logger = logging.getLogger(__name__)


def channelization(multiplier: int) -> Channelization:
    return Channelization(multiplier)


def mpcs_to_cir(mpcs: Sequence[Mpc], ch: Channelization) -> Cir:
    """
    Nearest-bin tap assignment of ``sqrt(alpha) * exp(j phi)``; MPCs landing in
    the same bin add coherently. ``t0`` is the earliest delay floored to the bin grid.
    """
    if not mpcs:
        raise ValueError("Cannot build a CIR from an empty MPC list")
    ts = ch.sampling_interval
    delays = np.array([m.delay for m in mpcs], dtype=np.float64)
    t0 = math.floor(delays.min() / ts) * ts
    index = np.rint((delays - t0) / ts).astype(np.int64)
    amplitude = np.sqrt([m.amplitude for m in mpcs]) * np.exp(1j * np.array([m.phase for m in mpcs]))
    taps = np.zeros(int(index.max()) + 1, dtype=np.complex128)
    np.add.at(taps, index, amplitude)
    return Cir(taps=taps, t0=t0, ts=ts)


def best_beams(spectrum: SpatialSpectrum, k: int) -> List[Beam]:
    """Top-``k`` hit pixels by path gain, descending; ties go to the lower (row, col)."""
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    gain = spectrum.path_gain.ravel()
    hits = np.flatnonzero(gain > 0.0)
    ranked = hits[np.lexsort((hits, -gain[hits]))][:k]

    grid = spectrum.grid
    aods = spectrum.aod_dirs().reshape(-1, 3)
    beams = []
    for flat in ranked:
        row, col = divmod(int(flat), grid.n_az)
        beams.append(Beam(
            row=row,
            col=col,
            aoa=grid.pixel_to_dir(row, col),
            path_gain=float(gain[flat]),
            tof=float(spectrum.tof.ravel()[flat]),
            aod=aods[flat],
        ))
    return beams


def beam_aoa_error_deg(predicted: SpatialSpectrum, truth: SpatialSpectrum) -> Optional[float]:
    """Angle between the top-1 AoAs of two spectra; ``None`` if either is all-miss."""
    a, b = best_beams(predicted, 1), best_beams(truth, 1)
    if not a or not b:
        return None
    if (a[0].row, a[0].col) == (b[0].row, b[0].col):
        return 0.0
    u, v = a[0].aoa, b[0].aoa
    return math.degrees(math.atan2(float(np.linalg.norm(np.cross(u, v))), float(np.dot(u, v))))


def beam_bin_distance(predicted: SpatialSpectrum, truth: SpatialSpectrum) -> Optional[int]:
    """Chebyshev pixel distance between top-1 beams, azimuth wrapping around."""
    a, b = best_beams(predicted, 1), best_beams(truth, 1)
    if not a or not b:
        return None
    n_az = truth.grid.n_az
    d_col = abs(a[0].col - b[0].col)
    return max(abs(a[0].row - b[0].row), min(d_col, n_az - d_col))
