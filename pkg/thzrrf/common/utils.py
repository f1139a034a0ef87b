import hashlib
from pathlib import Path
from typing import BinaryIO, Union


def calculate_file_hash(file_obj: BinaryIO) -> str:
    """Calculate SHA256 hash of a file object."""
    hash_sha256 = hashlib.sha256()
    for chunk in iter(lambda: file_obj.read(4096), b""):
        hash_sha256.update(chunk)
    file_obj.seek(0)  # Reset file pointer
    return hash_sha256.hexdigest()


def path_digest(path: Union[str, Path]) -> str:
    """SHA256 of a file's content."""
    with open(path, 'rb') as fh:
        return calculate_file_hash(fh)


def sample_filename(index: int, suffix: str) -> str:
    """Zero-padded per-sample file name, e.g. ``sample_00042.thzspec``."""
    return f"sample_{index:05d}{suffix}"
