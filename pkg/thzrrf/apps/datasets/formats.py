"""
Binary codecs for dataset samples.

Spectrum file, little-endian::

    b"THZSPEC1"
    int32 n_el, int32 n_az, int32 channel_count (4)
    float64 rx_position[3], float64 rx_orientation[4] (w, x, y, z)
    float32 planes[channel_count, n_el, n_az] in CHANNELS order, row-major

MPC file, little-endian::

    b"THZMPC01"
    uint32 count
    count records of float64: amplitude, phase, delay, aoa[3], aod[3], bounce_point[3]
    (bounce_point is NaN for the line-of-sight path)

Planes are binary32: a decoded spectrum holds float32-representable values and
re-encoding it reproduces the original bytes.
"""
import logging
import struct
from typing import List

import numpy as np

from thzrrf.apps.scenes.domain import Mpc, SpatialSpectrum
from thzrrf.common.geometry import RotationQ, SphericalGrid
from thzrrf.common.storage import BinaryReader, FormatError

logger = logging.getLogger(__name__)

SPECTRUM_MAGIC = b'THZSPEC1'
MPC_MAGIC = b'THZMPC01'
CHANNELS = ('path_gain', 'tof', 'aod_az', 'aod_el')
SPECTRUM_HEADER = '<iii'
POSE = '<7d'

MPC_RECORD = np.dtype([
    ('amplitude', '<f8'),
    ('phase', '<f8'),
    ('delay', '<f8'),
    ('aoa', '<f8', (3,)),
    ('aod', '<f8', (3,)),
    ('bounce_point', '<f8', (3,)),
])


def encode_spectrum(spectrum: SpatialSpectrum) -> bytes:
    q = spectrum.rx_orientation
    planes = np.stack([getattr(spectrum, name) for name in CHANNELS]).astype('<f4')
    return b''.join([
        SPECTRUM_MAGIC,
        struct.pack(SPECTRUM_HEADER, spectrum.grid.n_el, spectrum.grid.n_az, len(CHANNELS)),
        struct.pack(POSE, *spectrum.rx_position, q.w, q.x, q.y, q.z),
        np.ascontiguousarray(planes).tobytes(),
    ])


def decode_spectrum(data: bytes, source: str = '<spectrum>') -> SpatialSpectrum:
    reader = BinaryReader(data, source)
    reader.expect_magic(SPECTRUM_MAGIC)
    n_el, n_az, n_channels = reader.unpack(SPECTRUM_HEADER)
    if n_channels != len(CHANNELS):
        raise FormatError(f"{source}: expected {len(CHANNELS)} channels, found {n_channels}")
    if n_el < 1 or n_az < 1:
        raise FormatError(f"{source}: invalid grid {n_el}x{n_az}")
    px, py, pz, qw, qx, qy, qz = reader.unpack(POSE)
    planes = reader.array('<f4', (n_channels, n_el, n_az)).astype(np.float64)
    reader.finish()
    try:
        orientation = RotationQ(qw, qx, qy, qz)
    except ValueError as exc:
        raise FormatError(f"{source}: {exc}") from exc
    return SpatialSpectrum(
        grid=SphericalGrid(n_el, n_az),
        rx_position=np.array([px, py, pz]),
        rx_orientation=orientation,
        **{name: planes[i] for i, name in enumerate(CHANNELS)},
    )


def encode_mpcs(mpcs: List[Mpc]) -> bytes:
    records = np.zeros(len(mpcs), dtype=MPC_RECORD)
    for i, mpc in enumerate(mpcs):
        records[i] = (
            mpc.amplitude, mpc.phase, mpc.delay, mpc.aoa, mpc.aod,
            mpc.bounce_point if mpc.bounce_point is not None else np.full(3, np.nan),
        )
    return MPC_MAGIC + struct.pack('<I', len(mpcs)) + records.tobytes()


def decode_mpcs(data: bytes, source: str = '<mpcs>') -> List[Mpc]:
    reader = BinaryReader(data, source)
    reader.expect_magic(MPC_MAGIC)
    (count,) = reader.unpack('<I')
    records = reader.array(MPC_RECORD, (count,))
    reader.finish()
    mpcs = []
    for rec in records:
        bounce = rec['bounce_point']
        mpcs.append(Mpc(
            amplitude=float(rec['amplitude']),
            phase=float(rec['phase']),
            delay=float(rec['delay']),
            aoa=np.array(rec['aoa']),
            aod=np.array(rec['aod']),
            bounce_point=None if np.isnan(bounce).any() else np.array(bounce),
        ))
    return mpcs
