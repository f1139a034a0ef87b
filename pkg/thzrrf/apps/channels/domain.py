from dataclasses import dataclass

import numpy as np
from numpy.typing import NDArray
from scipy.constants import speed_of_light

from thzrrf.common.geometry import Vec3

BASE_BANDWIDTH_HZ = 2.16e9
ALLOWED_MULTIPLIERS = (1, 2, 4, 8, 16, 32)


@dataclass(frozen=True)
class Channelization:
    """THz channel bandwidth as an integer multiple of 2.16 GHz."""

    multiplier: int

    def __post_init__(self):
        if self.multiplier not in ALLOWED_MULTIPLIERS:
            raise ValueError(
                f"Channel multiplier must be one of {ALLOWED_MULTIPLIERS}, got {self.multiplier}"
            )

    @property
    def bandwidth(self) -> float:
        return self.multiplier * BASE_BANDWIDTH_HZ

    @property
    def sampling_interval(self) -> float:
        return 1.0 / self.bandwidth

    @property
    def path_resolution(self) -> float:
        return speed_of_light * self.sampling_interval


@dataclass(frozen=True, eq=False)
class Cir:
    """Baseband impulse response; tap ``i`` sits at delay ``t0 + i * ts``."""

    taps: NDArray[np.complex128]
    t0: float
    ts: float

    @property
    def delays(self) -> NDArray[np.float64]:
        return self.t0 + np.arange(len(self.taps)) * self.ts

    @property
    def nonzero_taps(self) -> NDArray[np.int64]:
        return np.flatnonzero(self.taps != 0)

    @property
    def power(self) -> float:
        return float(np.sum(np.abs(self.taps) ** 2))


@dataclass(frozen=True, eq=False)
class Beam:
    row: int
    col: int
    aoa: Vec3  # pixel direction in the receiver frame
    path_gain: float
    tof: float
    aod: Vec3
