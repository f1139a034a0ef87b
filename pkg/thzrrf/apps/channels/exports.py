"""
CIR export: a tab-separated text table and a compact binary variant.

Binary layout (little-endian): ``b"THZCIR01"``, uint32 tap count, float64 t0,
float64 ts, then float32 ``(real, imag)`` pairs.
"""
import struct
from pathlib import Path
from typing import Union

import numpy as np

from thzrrf.common.storage import BinaryReader, atomic_write_bytes, atomic_write_text, read_bytes

from .domain import Cir

MAGIC = b'THZCIR01'


def cir_to_text(cir: Cir) -> str:
    lines = [f"# t0_s={cir.t0:.12e} ts_s={cir.ts:.12e}", "delay_s\treal\timag"]
    for delay, tap in zip(cir.delays, cir.taps):
        lines.append(f"{delay:.12e}\t{tap.real:.9e}\t{tap.imag:.9e}")
    return '\n'.join(lines) + '\n'


def cir_to_bytes(cir: Cir) -> bytes:
    pairs = np.empty((len(cir.taps), 2), dtype='<f4')
    pairs[:, 0] = cir.taps.real
    pairs[:, 1] = cir.taps.imag
    return MAGIC + struct.pack('<Idd', len(cir.taps), cir.t0, cir.ts) + pairs.tobytes()


def cir_from_bytes(data: bytes, source: str = '<cir>') -> Cir:
    reader = BinaryReader(data, source)
    reader.expect_magic(MAGIC)
    count, t0, ts = reader.unpack('<Idd')
    pairs = reader.array('<f4', (count, 2)).astype(np.float64)
    reader.finish()
    return Cir(taps=pairs[:, 0] + 1j * pairs[:, 1], t0=t0, ts=ts)


def write_cir(cir: Cir, path: Union[str, Path], binary: bool = False) -> Path:
    if binary:
        return atomic_write_bytes(path, cir_to_bytes(cir))
    return atomic_write_text(path, cir_to_text(cir))


def read_cir_binary(path: Union[str, Path]) -> Cir:
    return cir_from_bytes(read_bytes(path), source=str(path))
