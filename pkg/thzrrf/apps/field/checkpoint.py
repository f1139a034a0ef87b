"""
Field checkpoint codec.

Layout (little-endian)::

    b"THZRRF01"
    uint32 count, uint32 sh_degree, float64 carrier_hz, float64[3] tx_position
    float32 centers[count,3], scales[count,3], rotations[count,4] (w first),
            densities[count], sh[count,(L+1)^2]
    optional tagged blocks, each a 4-byte tag followed by:
      b"CALB"  uint32 n, float32 depths[n]     legacy calibration depths
      b"META"  uint32 n, n bytes of UTF-8 JSON  seeding metadata

Arrays are stored as binary32, so a loaded field holds float32-representable
values and re-saving it reproduces the file byte for byte.
"""
import json
import logging
import struct
from pathlib import Path
from typing import Optional, Tuple, Union

import numpy as np
from numpy.typing import NDArray

from thzrrf.common.harmonics import MAX_SH_DEGREE, sh_coefficient_count
from thzrrf.common.storage import BinaryReader, FormatError, atomic_write_bytes, read_bytes

from .domain import GaussianField

logger = logging.getLogger(__name__)

MAGIC = b'THZRRF01'
HEADER = '<IIdddd'
CALIBRATION_TAG = b'CALB'
METADATA_TAG = b'META'


def encode_checkpoint(field: GaussianField, calibration: Optional[NDArray[np.float64]] = None) -> bytes:
    parts = [
        MAGIC,
        struct.pack(HEADER, len(field), field.sh_degree, field.carrier_frequency, *field.tx_position),
    ]
    for array in (field.centers, field.scales, field.rotations, field.densities, field.sh):
        parts.append(np.ascontiguousarray(array, dtype='<f4').tobytes())
    if calibration is not None:
        depths = np.asarray(calibration, dtype='<f4').reshape(-1)
        if len(depths) != len(field):
            raise ValueError(f"Calibration has {len(depths)} depths for {len(field)} Gaussians")
        parts += [CALIBRATION_TAG, struct.pack('<I', len(depths)), depths.tobytes()]
    if field.metadata:
        meta = json.dumps(field.metadata, sort_keys=True).encode('utf-8')
        parts += [METADATA_TAG, struct.pack('<I', len(meta)), meta]
    return b''.join(parts)


def decode_checkpoint(data: bytes, source: str = '<checkpoint>'
                      ) -> Tuple[GaussianField, Optional[NDArray[np.float64]]]:
    reader = BinaryReader(data, source)
    reader.expect_magic(MAGIC)
    count, degree, carrier, tx, ty, tz = reader.unpack(HEADER)
    if degree > MAX_SH_DEGREE:
        raise FormatError(f"{source}: unsupported SH degree {degree}")
    k = sh_coefficient_count(degree)

    def block(width: int) -> NDArray[np.float64]:
        shape = (count, width) if width > 1 else (count,)
        return reader.array('<f4', shape).astype(np.float64)

    centers, scales, rotations = block(3), block(3), block(4)
    densities, sh = block(1), block(k)

    calibration = None
    metadata: dict = {}
    while reader.remaining:
        tag = reader.take(4)
        (size,) = reader.unpack('<I')
        if tag == CALIBRATION_TAG:
            if size != count:
                raise FormatError(f"{source}: calibration block has {size} depths for {count} Gaussians")
            calibration = reader.array('<f4', (size,)).astype(np.float64)
        elif tag == METADATA_TAG:
            try:
                metadata = json.loads(reader.take(size).decode('utf-8'))
            except (UnicodeDecodeError, json.JSONDecodeError) as exc:
                raise FormatError(f"{source}: unreadable metadata block") from exc
        else:
            raise FormatError(f"{source}: unknown block {tag!r}")

    try:
        field = GaussianField(
            centers=centers, scales=scales, rotations=rotations, densities=densities, sh=sh,
            tx_position=(tx, ty, tz), carrier_frequency=carrier, sh_degree=degree,
            metadata=metadata,
        )
    except ValueError as exc:
        raise FormatError(f"{source}: {exc}") from exc
    return field, calibration


def save_checkpoint(path: Union[str, Path], field: GaussianField,
                    calibration: Optional[NDArray[np.float64]] = None) -> Path:
    target = atomic_write_bytes(path, encode_checkpoint(field, calibration))
    logger.info(f"Wrote checkpoint {target} ({len(field)} Gaussians)")
    return target


def load_checkpoint(path: Union[str, Path]) -> Tuple[GaussianField, Optional[NDArray[np.float64]]]:
    return decode_checkpoint(read_bytes(path), source=str(path))
