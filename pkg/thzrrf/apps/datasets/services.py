"""
Dataset persistence: manifest plus one spectrum file and one MPC file per sample.
"""
import logging
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path
from typing import Optional, Union

import numpy as np
from django.conf import settings

from thzrrf.apps.scenes.domain import Dataset, Sample
from thzrrf.common.geometry import SphericalGrid
from thzrrf.common.storage import (
    FormatError, atomic_write_bytes, atomic_write_text, ensure_dir, read_bytes,
)
from thzrrf.common.utils import sample_filename

from .formats import decode_mpcs, decode_spectrum, encode_mpcs, encode_spectrum
from .manifest import MANIFEST_NAME, DatasetManifest, SampleEntry

logger = logging.getLogger(__name__)

SPECTRUM_SUFFIX = '.thzspec'
MPC_SUFFIX = '.thzmpc'


def manifest_for(dataset: Dataset, with_mpcs: bool = True) -> DatasetManifest:
    return DatasetManifest(
        grid=dataset.grid.shape,
        sample_count=len(dataset),
        carrier_frequency=dataset.carrier_frequency,
        tx_position=tuple(dataset.tx_position),
        scene_hash=dataset.scene_digest,
        rng_seed=dataset.rng_seed,
        samples=[
            SampleEntry(
                index=s.index,
                spectrum=sample_filename(s.index, SPECTRUM_SUFFIX),
                mpcs=sample_filename(s.index, MPC_SUFFIX) if with_mpcs else None,
            )
            for s in dataset
        ],
    )


def write_dataset(dataset: Dataset, out_dir: Union[str, Path], threads: Optional[int] = None,
                  with_mpcs: bool = True) -> Path:
    """Write every sample, then the manifest; returns the manifest path."""
    root = ensure_dir(out_dir)
    manifest = manifest_for(dataset, with_mpcs)

    def write(pair: tuple) -> None:
        sample, entry = pair
        atomic_write_bytes(root / entry.spectrum, encode_spectrum(sample.spectrum))
        if entry.mpcs:
            atomic_write_bytes(root / entry.mpcs, encode_mpcs(sample.mpcs))

    with ThreadPoolExecutor(max_workers=threads or settings.THZ_THREADS) as executor:
        list(executor.map(write, zip(dataset, manifest.samples)))
    path = atomic_write_text(root / MANIFEST_NAME, manifest.to_json())
    logger.info(f"Wrote dataset of {len(dataset)} samples to {root}")
    return path


def read_manifest(directory: Union[str, Path]) -> DatasetManifest:
    path = Path(directory) / MANIFEST_NAME
    return DatasetManifest.from_json(read_bytes(path).decode('utf-8'), source=str(path))


def read_dataset(directory: Union[str, Path], threads: Optional[int] = None) -> Dataset:
    """Load a dataset directory; a missing file raises ``FileNotFoundError`` naming it."""
    root = Path(directory)
    manifest = read_manifest(root)
    grid = SphericalGrid(*manifest.grid)

    def read(entry: SampleEntry) -> Sample:
        spectrum_path = root / entry.spectrum
        spectrum = decode_spectrum(read_bytes(spectrum_path), str(spectrum_path))
        if spectrum.grid != grid:
            raise FormatError(f"{spectrum_path}: grid {spectrum.grid.shape} differs from manifest {grid.shape}")
        mpcs = []
        if entry.mpcs:
            mpc_path = root / entry.mpcs
            mpcs = decode_mpcs(read_bytes(mpc_path), str(mpc_path))
        return Sample(index=entry.index, spectrum=spectrum, mpcs=mpcs)

    with ThreadPoolExecutor(max_workers=threads or settings.THZ_THREADS) as executor:
        samples = list(executor.map(read, manifest.samples))
    logger.debug(f"Read {len(samples)} samples from {root}")
    return Dataset(
        grid=grid,
        carrier_frequency=manifest.carrier_frequency,
        tx_position=np.asarray(manifest.tx_position, dtype=np.float64),
        samples=samples,
        rng_seed=manifest.rng_seed,
        scene_digest=manifest.scene_hash,
    )

