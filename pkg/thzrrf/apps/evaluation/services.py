"""
Training-size sweep: train the full-path and legacy variants on nested
training subsets and score both on one held-out test set.
"""
import csv
import io
import logging
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np
from django.conf import settings

from thzrrf.apps.field.domain import SeedConfig
from thzrrf.apps.field.services import seed_from_scene
from thzrrf.apps.rendering.enums import RenderMode
from thzrrf.apps.rendering.services import render_spectra
from thzrrf.apps.scenes.domain import Dataset, Scene
from thzrrf.apps.scenes.services import generate_dataset
from thzrrf.apps.training.domain import TrainConfig
from thzrrf.apps.training.services import legacy_calibration, train
from thzrrf.common.geometry import SphericalGrid
from thzrrf.common.storage import atomic_write_text

from .metrics import evaluate_spectra

logger = logging.getLogger(__name__)

SWEEP_COLUMNS = ('size', 'variant', 'psnr_mean', 'psnr_min', 'psnr_max',
                 'ssim_mean', 'ssim_min', 'ssim_max', 'train_seconds', 'beam_hit_rate')
VARIANTS = (RenderMode.FULL_PATH, RenderMode.LEGACY)


@dataclass(frozen=True)
class SweepConfig:
    sizes: Tuple[int, ...] = (10, 20, 50, 100)
    test_size: int = 20
    pool_seed: int = 0
    grid_rows: int = field(default_factory=lambda: settings.THZ_GRID_ROWS)
    grid_cols: int = field(default_factory=lambda: settings.THZ_GRID_COLS)

    def __post_init__(self):
        object.__setattr__(self, 'sizes', tuple(int(s) for s in self.sizes))
        if not self.sizes:
            raise ValueError("Sweep needs at least one training size")
        if min(self.sizes) < 1:
            raise ValueError(f"Training sizes must be >= 1, got {list(self.sizes)}")
        if self.test_size < 1:
            raise ValueError(f"test_size must be >= 1, got {self.test_size}")

    @property
    def grid(self) -> SphericalGrid:
        return SphericalGrid(self.grid_rows, self.grid_cols)

    @property
    def pool_size(self) -> int:
        return max(self.sizes) + self.test_size


@dataclass
class SweepRow:
    size: int
    variant: str
    psnr_mean: float
    psnr_min: float
    psnr_max: float
    ssim_mean: float
    ssim_min: float
    ssim_max: float
    train_seconds: float
    # share of test samples whose top-1 beam is within one bin of the truth
    beam_hit_rate: float = float('nan')


@dataclass(eq=False)
class SweepPool:
    """One simulated pool split into a fixed test set and a nested training order."""

    dataset: Dataset
    test_positions: List[int]
    train_order: List[int]

    @property
    def test_set(self) -> Dataset:
        return self.dataset.subset(self.test_positions)

    def training_subset(self, size: int) -> Dataset:
        if size > len(self.train_order):
            raise ValueError(f"Training size {size} exceeds the {len(self.train_order)} available samples")
        return self.dataset.subset(self.train_order[:size])


def build_pool(scene: Scene, sweep_cfg: SweepConfig, threads: Optional[int] = None,
               scene_digest: str = '') -> SweepPool:
    """
    Simulate ``max(sizes) + test_size`` samples and split them with a
    permutation seeded by ``pool_seed``. Smaller training subsets are prefixes
    of larger ones and never overlap the test set.
    """
    dataset = generate_dataset(scene, sweep_cfg.pool_size, sweep_cfg.grid, sweep_cfg.pool_seed,
                               threads=threads, scene_digest=scene_digest)
    order = np.random.default_rng(sweep_cfg.pool_seed).permutation(len(dataset)).tolist()
    return SweepPool(dataset=dataset, test_positions=order[:sweep_cfg.test_size],
                     train_order=order[sweep_cfg.test_size:])


def sweep_cell(scene: Scene, pool: SweepPool, size: int, variant: Union[RenderMode, str],
               cfg: TrainConfig, seed_cfg: Optional[SeedConfig] = None,
               threads: Optional[int] = None) -> SweepRow:
    """Train one variant on the first ``size`` training samples and score it on the test set."""
    mode = RenderMode(variant)
    run_cfg = TrainConfig(**{**asdict(cfg), 'render_mode': mode, 'checkpoint_every': 0,
                             'checkpoint_path': None})
    field_ = seed_from_scene(scene, seed_cfg or SeedConfig())
    train_set = pool.training_subset(size)
    test_set = pool.test_set

    started = time.perf_counter()
    calibration = legacy_calibration(field_, train_set, threads=threads) if mode == RenderMode.LEGACY else None
    trained, _ = train(field_, train_set, run_cfg, calibration=calibration, threads=threads)
    train_seconds = time.perf_counter() - started

    poses = [(s.rx_position, s.rx_orientation) for s in test_set]
    predicted = render_spectra(trained, poses, test_set.grid, mode, calibration, threads)
    report = evaluate_spectra(predicted, [s.spectrum for s in test_set], floor=cfg.db_floor)
    hit_rate = report.beam_hit_rate()
    psnr_lo, psnr_hi = report.psnr_range
    ssim_lo, ssim_hi = report.ssim_range
    logger.info(f"Sweep cell size={size} {mode}: PSNR {report.psnr:.2f} dB, SSIM {report.ssim:.3f}")
    return SweepRow(size=size, variant=str(mode), psnr_mean=report.psnr, psnr_min=psnr_lo,
                    psnr_max=psnr_hi, ssim_mean=report.ssim, ssim_min=ssim_lo, ssim_max=ssim_hi,
                    train_seconds=train_seconds,
                    beam_hit_rate=float('nan') if hit_rate is None else hit_rate)


def sweep(scene: Scene, sizes: Sequence[int], test_size: int, cfg: TrainConfig,
          seed_cfg: Optional[SeedConfig] = None, pool_seed: int = 0,
          grid: Optional[SphericalGrid] = None, threads: Optional[int] = None) -> List[SweepRow]:
    """
    Rows ordered by size, then full-path before legacy. Every cell starts
    from the same seeded field, so identical inputs give identical metrics.
    """
    grid = grid or SphericalGrid(settings.THZ_GRID_ROWS, settings.THZ_GRID_COLS)
    sweep_cfg = SweepConfig(sizes=tuple(sizes), test_size=test_size, pool_seed=pool_seed,
                            grid_rows=grid.n_el, grid_cols=grid.n_az)
    pool = build_pool(scene, sweep_cfg, threads)
    rows = []
    for size in sweep_cfg.sizes:
        for variant in VARIANTS:
            rows.append(sweep_cell(scene, pool, size, variant, cfg, seed_cfg, threads))
    return rows


def format_sweep_table(rows: Sequence[SweepRow]) -> str:
    buffer = io.StringIO()
    writer = csv.writer(buffer, delimiter='\t', lineterminator='\n')
    writer.writerow(SWEEP_COLUMNS)
    for row in rows:
        values = asdict(row)
        writer.writerow([values['size'], values['variant']]
                        + [f"{values[c]:.6f}" for c in SWEEP_COLUMNS[2:]])
    return buffer.getvalue()


def write_sweep_table(rows: Sequence[SweepRow], path: Union[str, Path]) -> Path:
    """Tab-separated table with a header row."""
    return atomic_write_text(path, format_sweep_table(rows))
