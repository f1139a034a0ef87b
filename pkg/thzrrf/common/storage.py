"""
Filesystem persistence helpers. Every write goes to a temporary sibling and is
moved into place with ``os.replace`` so readers never observe partial files.
"""
import logging
import os
import struct
import tempfile
from pathlib import Path
from typing import Tuple, Union

import numpy as np
from numpy.typing import DTypeLike

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]


def ensure_dir(path: PathLike) -> Path:
    """Create directory (and parents) if it doesn't exist."""
    directory = Path(path)
    directory.mkdir(parents=True, exist_ok=True)
    return directory


def atomic_write_bytes(path: PathLike, data: bytes) -> Path:
    """Write bytes atomically and return the final path."""
    target = Path(path)
    ensure_dir(target.parent)
    fd, tmp_name = tempfile.mkstemp(prefix=f".{target.name}.", dir=target.parent)
    try:
        with os.fdopen(fd, 'wb') as fh:
            fh.write(data)
            fh.flush()
            os.fsync(fh.fileno())
        os.replace(tmp_name, target)
    except OSError:
        logger.exception(f"Failed to write {target}")
        if os.path.exists(tmp_name):
            os.unlink(tmp_name)
        raise
    return target


def atomic_write_text(path: PathLike, text: str) -> Path:
    return atomic_write_bytes(path, text.encode('utf-8'))


def read_bytes(path: PathLike) -> bytes:
    """Read a whole file; missing files raise ``FileNotFoundError`` naming the path."""
    target = Path(path)
    if not target.is_file():
        raise FileNotFoundError(f"No such file: {target}")
    return target.read_bytes()


class FormatError(ValueError):
    """Binary artifact has the wrong magic, an unknown version or is truncated."""


class BinaryReader:
    """Sequential little-endian reader over an in-memory artifact."""

    def __init__(self, data: bytes, source: str = '<bytes>'):
        self.data = data
        self.source = source
        self.offset = 0

    @property
    def remaining(self) -> int:
        return len(self.data) - self.offset

    def take(self, size: int) -> bytes:
        if size < 0 or self.remaining < size:
            raise FormatError(
                f"{self.source}: truncated at byte {self.offset} (needed {size}, have {self.remaining})"
            )
        chunk = self.data[self.offset:self.offset + size]
        self.offset += size
        return chunk

    def expect_magic(self, magic: bytes) -> None:
        found = self.data[:len(magic)]
        if found != magic:
            raise FormatError(f"{self.source}: bad magic {found!r}, expected {magic!r}")
        self.offset = len(magic)

    def unpack(self, fmt: str) -> tuple:
        return struct.unpack(fmt, self.take(struct.calcsize(fmt)))

    def array(self, dtype: DTypeLike, shape: Tuple[int, ...]) -> np.ndarray:
        count = int(np.prod(shape)) if shape else 1
        item = np.dtype(dtype)
        return np.frombuffer(self.take(count * item.itemsize), dtype=item).reshape(shape)

    def finish(self) -> None:
        if self.remaining:
            raise FormatError(f"{self.source}: {self.remaining} unexpected trailing bytes")
