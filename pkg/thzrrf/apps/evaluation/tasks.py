"""
Celery tasks for distributed training-size sweeps.
"""
import logging
from dataclasses import asdict
from functools import lru_cache
from typing import Optional

from celery import shared_task

from thzrrf.apps.field.domain import SeedConfig
from thzrrf.apps.scenes.config import load_scene, scene_digest
from thzrrf.apps.training.domain import TrainConfig

from .services import SweepConfig, SweepPool, build_pool, sweep_cell

logger = logging.getLogger(__name__)


@lru_cache(maxsize=4)
def _cached_pool(scene_path: str, digest: str, sweep_cfg: SweepConfig) -> SweepPool:
    # keyed on the digest so an edited scene file is re-simulated
    return build_pool(load_scene(scene_path), sweep_cfg, scene_digest=digest)


@shared_task
def run_sweep_cell(scene_path: str, size: int, variant: str, sweep_options: dict,
                   train_options: dict, seed_options: Optional[dict] = None) -> dict:
    """
    Train and score one (size, variant) cell of a sweep.

    Args:
        scene_path: Scene YAML readable by the worker
        size: Number of training samples
        variant: ``full_path`` or ``legacy``
        sweep_options: ``SweepConfig`` fields
        train_options: ``TrainConfig`` fields
        seed_options: ``SeedConfig`` fields

    Returns:
        The ``SweepRow`` as a dict
    """
    sweep_cfg = SweepConfig(**sweep_options)
    logger.info(f"Starting sweep cell size={size} variant={variant} on {scene_path}")
    try:
        pool = _cached_pool(scene_path, scene_digest(scene_path), sweep_cfg)
        row = sweep_cell(load_scene(scene_path), pool, size, variant, TrainConfig(**train_options),
                         SeedConfig(**(seed_options or {})), threads=None)
    except Exception as e:
        logger.error(f"Sweep cell size={size} variant={variant} failed: {str(e)}")
        raise
    return asdict(row)
