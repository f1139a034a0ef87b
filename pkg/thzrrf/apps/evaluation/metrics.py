"""
Image-quality metrics on dB-domain spectra.
"""
import math
from dataclasses import dataclass, field
from typing import List, Optional, Sequence

import numpy as np
from django.conf import settings
from numpy.typing import ArrayLike, NDArray
from scipy.ndimage import uniform_filter

from thzrrf.apps.channels.services import beam_aoa_error_deg, beam_bin_distance
from thzrrf.apps.scenes.domain import SpatialSpectrum

PSNR_CAP = 100.0


def _range(floor: Optional[float], ceiling: Optional[float]) -> tuple[float, float]:
    lo = settings.THZ_DB_FLOOR if floor is None else floor
    hi = settings.THZ_DB_CEILING if ceiling is None else ceiling
    if hi <= lo:
        raise ValueError(f"dB ceiling {hi} must exceed floor {lo}")
    return lo, hi


def dynamic_range(floor: Optional[float] = None, ceiling: Optional[float] = None) -> float:
    lo, hi = _range(floor, ceiling)
    return hi - lo


def db_image(path_gain: ArrayLike, floor: Optional[float] = None,
             ceiling: Optional[float] = None) -> NDArray[np.float64]:
    """Linear power gain to dB clamped to ``[floor, ceiling]``; zero gain maps to the floor."""
    lo, hi = _range(floor, ceiling)
    gain = np.asarray(path_gain, dtype=np.float64)
    with np.errstate(divide='ignore'):
        db = np.where(gain > 0.0, 10.0 * np.log10(np.where(gain > 0.0, gain, 1.0)), lo)
    return np.clip(db, lo, hi)


def _same_shape(a: NDArray[np.float64], b: NDArray[np.float64]) -> None:
    if a.shape != b.shape:
        raise ValueError(f"Image shapes differ: {a.shape} vs {b.shape}")


def psnr(a: ArrayLike, b: ArrayLike, dynamic_range: float = 160.0) -> float:
    """``10 log10(R^2 / MSE)``; identical images report the 100 dB cap."""
    x = np.asarray(a, dtype=np.float64)
    y = np.asarray(b, dtype=np.float64)
    _same_shape(x, y)
    if dynamic_range <= 0.0:
        raise ValueError(f"dynamic_range must be positive, got {dynamic_range}")
    mse = float(np.mean((x - y) ** 2))
    if mse == 0.0:
        return PSNR_CAP
    return min(PSNR_CAP, 10.0 * math.log10(dynamic_range ** 2 / mse))


def ssim(a: ArrayLike, b: ArrayLike, window: int = 7, k1: float = 0.01, k2: float = 0.03,
         dynamic_range: float = 160.0) -> float:
    """
    Mean structural similarity with a uniform ``window x window`` filter,
    sample covariances and the filter-width border cropped from the mean.
    """
    x = np.asarray(a, dtype=np.float64)
    y = np.asarray(b, dtype=np.float64)
    _same_shape(x, y)
    if window < 1 or window % 2 == 0:
        raise ValueError(f"SSIM window must be odd and positive, got {window}")
    if min(x.shape) < window:
        raise ValueError(f"SSIM window {window} exceeds image shape {x.shape}")

    n = window ** x.ndim
    cov_norm = n / (n - 1.0) if n > 1 else 1.0
    ux = uniform_filter(x, size=window)
    uy = uniform_filter(y, size=window)
    uxx = uniform_filter(x * x, size=window)
    uyy = uniform_filter(y * y, size=window)
    uxy = uniform_filter(x * y, size=window)
    vx = cov_norm * (uxx - ux * ux)
    vy = cov_norm * (uyy - uy * uy)
    vxy = cov_norm * (uxy - ux * uy)

    c1 = (k1 * dynamic_range) ** 2
    c2 = (k2 * dynamic_range) ** 2
    s = ((2.0 * ux * uy + c1) * (2.0 * vxy + c2)) / ((ux * ux + uy * uy + c1) * (vx + vy + c2))

    pad = (window - 1) // 2
    if pad:
        s = s[tuple(slice(pad, -pad) for _ in s.shape)]
    return float(s.mean())


@dataclass
class SampleMetrics:
    psnr: float
    ssim: float
    beam_aoa_error_deg: Optional[float] = None
    beam_bin_distance: Optional[int] = None


@dataclass
class MetricReport:
    per_sample: List[SampleMetrics] = field(default_factory=list)

    def _values(self, name: str) -> NDArray[np.float64]:
        return np.array([getattr(s, name) for s in self.per_sample
                         if getattr(s, name) is not None], dtype=np.float64)

    @property
    def psnr(self) -> float:
        return float(self._values('psnr').mean()) if self.per_sample else float('nan')

    @property
    def ssim(self) -> float:
        return float(self._values('ssim').mean()) if self.per_sample else float('nan')

    @property
    def psnr_range(self) -> tuple[float, float]:
        values = self._values('psnr')
        return float(values.min()), float(values.max())

    @property
    def ssim_range(self) -> tuple[float, float]:
        values = self._values('ssim')
        return float(values.min()), float(values.max())

    @property
    def beam_aoa_error_deg(self) -> Optional[float]:
        values = self._values('beam_aoa_error_deg')
        return float(values.mean()) if len(values) else None

    def beam_hit_rate(self, max_bins: int = 1) -> Optional[float]:
        """Share of samples whose top-1 beam lies within ``max_bins`` grid bins of the truth."""
        values = self._values('beam_bin_distance')
        return float(np.mean(values <= max_bins)) if len(values) else None

    def as_dict(self) -> dict:
        return {
            'psnr': self.psnr,
            'ssim': self.ssim,
            'beam_aoa_error_deg': self.beam_aoa_error_deg,
            'beam_hit_rate': self.beam_hit_rate(),
            'samples': [vars(s) for s in self.per_sample],
        }


def evaluate_spectra(predicted: Sequence[SpatialSpectrum], truth: Sequence[SpatialSpectrum],
                     floor: Optional[float] = None, ceiling: Optional[float] = None,
                     window: Optional[int] = None) -> MetricReport:
    """PSNR, SSIM and top-1 beam agreement for paired spectra."""
    if len(predicted) != len(truth):
        raise ValueError(f"{len(predicted)} predicted spectra for {len(truth)} ground-truth spectra")
    lo, hi = _range(floor, ceiling)
    size = settings.THZ_SSIM_WINDOW if window is None else window
    report = MetricReport()
    for pred, true in zip(predicted, truth):
        a = db_image(pred.path_gain, lo, hi)
        b = db_image(true.path_gain, lo, hi)
        report.per_sample.append(SampleMetrics(
            psnr=psnr(a, b, hi - lo),
            ssim=ssim(a, b, window=size, dynamic_range=hi - lo),
            beam_aoa_error_deg=beam_aoa_error_deg(pred, true),
            beam_bin_distance=beam_bin_distance(pred, true),
        ))
    return report
