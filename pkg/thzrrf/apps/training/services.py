"""
RF training of the Gaussian field's SH gain coefficients.

Geometry is frozen, so every training pose is blended once up front
(``BlendCache``) and each epoch only re-evaluates the decoded gains. Gradients
are analytic through the dB transform, the blend sum, the distance factor and
the exp link.
"""
import logging
import math
import time
from concurrent.futures import ThreadPoolExecutor
from typing import List, Optional, Sequence, Tuple

import numpy as np
from django.conf import settings
from numpy.typing import NDArray

from thzrrf.apps.evaluation.metrics import evaluate_spectra
from thzrrf.apps.field.checkpoint import save_checkpoint
from thzrrf.apps.field.domain import GaussianField
from thzrrf.apps.field.services import decoded_gains
from thzrrf.apps.rendering.domain import BlendCache
from thzrrf.apps.rendering.enums import RenderMode
from thzrrf.apps.rendering.services import build_blend_caches, spectrum_from_cache, term_lengths
from thzrrf.apps.scenes.domain import Dataset, Sample, SpatialSpectrum
from thzrrf.apps.scenes.services import free_space_gain

from .domain import TrainConfig, TrainReport
from .enums import LossKind, OptimizerKind

logger = logging.getLogger(__name__)

LN10 = math.log(10.0)


class TrainingDivergedError(RuntimeError):
    """Loss or gradient became non-finite during training."""


def clamped_db(path_gain: NDArray[np.float64], floor: float) -> NDArray[np.float64]:
    """dB of linear gains clamped from below at ``floor``; zero gain maps to the floor."""
    gain = np.asarray(path_gain, dtype=np.float64)
    positive = gain > 0.0
    db = np.full(gain.shape, floor)
    db[positive] = np.maximum(10.0 * np.log10(gain[positive]), floor)
    return db


def _pixel_loss(rendered_db: NDArray[np.float64], truth_db: NDArray[np.float64],
                kind: LossKind) -> Tuple[NDArray[np.float64], NDArray[np.float64]]:
    """Per-pixel loss and its derivative with respect to the rendered dB value."""
    diff = rendered_db - truth_db
    if kind == LossKind.L1_DB:
        return np.abs(diff), np.sign(diff)
    return diff ** 2, 2.0 * diff


def _weights(weights: Optional[NDArray[np.float64]], size: int) -> NDArray[np.float64]:
    if weights is None:
        return np.ones(size)
    w = np.asarray(weights, dtype=np.float64).reshape(-1)
    if len(w) != size:
        raise ValueError(f"{len(w)} pixel weights for {size} pixels")
    return w


def loss(rendered: SpatialSpectrum, truth: SpatialSpectrum, cfg: TrainConfig,
         weights: Optional[NDArray[np.float64]] = None) -> float:
    """Weighted mean per-pixel loss on floor-clamped dB gains."""
    if rendered.grid != truth.grid:
        raise ValueError(f"Grid mismatch: {rendered.grid.shape} vs {truth.grid.shape}")
    values, _ = _pixel_loss(clamped_db(rendered.path_gain, cfg.db_floor).ravel(),
                            clamped_db(truth.path_gain, cfg.db_floor).ravel(), cfg.loss_kind)
    w = _weights(weights, values.size)
    return float(np.sum(w * values) / values.size)


def loss_and_grad(cache: BlendCache, truth_db: NDArray[np.float64], sh: NDArray[np.float64],
                  cfg: TrainConfig, calibration: Optional[NDArray[np.float64]] = None,
                  weights: Optional[NDArray[np.float64]] = None) -> Tuple[float, NDArray[np.float64]]:
    """
    Loss of one pose and its gradient with respect to every SH coefficient.

    ``p = sum_k w_k * F_k * exp(c_k . Y)``; ``dL/dc_k = dL/dD * 10 / (p ln 10) * w_k F_k exp(c_k . Y) * Y``.
    Pixels clamped at the floor pass no gradient.
    """
    n_pix = cache.grid.size
    lengths = term_lengths(cache, cfg.render_mode, calibration)
    basis = cache.basis[cache.pixel]
    term_gain = cache.weight * free_space_gain(cache.wavelength, lengths) * decoded_gains(sh[cache.gaussian], basis)
    rendered = np.bincount(cache.pixel, weights=term_gain, minlength=n_pix)

    rendered_db = clamped_db(rendered, cfg.db_floor)
    values, d_loss = _pixel_loss(rendered_db, truth_db, cfg.loss_kind)
    w = _weights(weights, n_pix)
    total = float(np.sum(w * values) / n_pix)

    active = rendered > 0.0
    active[active] = 10.0 * np.log10(rendered[active]) > cfg.db_floor
    d_gain = np.zeros(n_pix)
    d_gain[active] = w[active] * d_loss[active] / n_pix * 10.0 / (rendered[active] * LN10)

    scale = d_gain[cache.pixel] * term_gain
    grad = np.zeros_like(sh)
    for k in range(sh.shape[1]):
        grad[:, k] = np.bincount(cache.gaussian, weights=scale * basis[:, k], minlength=len(sh))
    return total, grad


def grad_sh(field: GaussianField, sample: Sample, cfg: TrainConfig,
            calibration: Optional[NDArray[np.float64]] = None,
            weights: Optional[NDArray[np.float64]] = None,
            cache: Optional[BlendCache] = None) -> NDArray[np.float64]:
    if cache is None:
        cache = build_blend_caches(field, [(sample.rx_position, sample.rx_orientation)],
                                   sample.spectrum.grid, threads=1)[0]
    truth_db = clamped_db(sample.spectrum.path_gain, cfg.db_floor).ravel()
    _, grad = loss_and_grad(cache, truth_db, field.sh, cfg, calibration, weights)
    return grad


def legacy_calibration(field: GaussianField, dataset: Dataset,
                       caches: Optional[Sequence[BlendCache]] = None,
                       threads: Optional[int] = None) -> NDArray[np.float64]:
    """
    Mean view depth of each Gaussian over every training ray it is blended on.
    Gaussians never hit take the mean over the Gaussians that were.
    """
    if len(dataset) == 0:
        raise ValueError("Calibration needs a non-empty dataset")
    if caches is None:
        caches = build_blend_caches(field, _poses(dataset), dataset.grid, threads)
    n = len(field)
    sums = np.zeros(n)
    counts = np.zeros(n)
    for cache in caches:
        sums += np.bincount(cache.gaussian, weights=cache.depth, minlength=n)
        counts += np.bincount(cache.gaussian, minlength=n)

    hit = counts > 0
    depths = np.zeros(n)
    if not hit.any():
        fallback = float(np.mean([np.linalg.norm(field.centers - s.rx_position, axis=1).mean()
                                  for s in dataset]))
        logger.warning(f"No Gaussian is blended on any training ray; calibrating all at {fallback:.3f} m")
        return np.full(n, fallback)
    depths[hit] = sums[hit] / counts[hit]
    if not hit.all():
        fallback = float(depths[hit].mean())
        depths[~hit] = fallback
        logger.warning(f"{int((~hit).sum())} Gaussians never hit in training; using mean depth {fallback:.3f} m")
    return depths


def _poses(dataset: Dataset) -> List[tuple]:
    return [(s.rx_position, s.rx_orientation) for s in dataset]


class _Optimizer:
    def __init__(self, cfg: TrainConfig, shape: Tuple[int, ...]):
        self.cfg = cfg
        self.m = np.zeros(shape)
        self.v = np.zeros(shape)
        self.step_count = 0

    def step(self, params: NDArray[np.float64], grad: NDArray[np.float64]) -> NDArray[np.float64]:
        cfg = self.cfg
        if cfg.optimizer == OptimizerKind.SGD:
            return params - cfg.learning_rate * grad
        self.step_count += 1
        self.m = cfg.beta1 * self.m + (1.0 - cfg.beta1) * grad
        self.v = cfg.beta2 * self.v + (1.0 - cfg.beta2) * grad * grad
        m_hat = self.m / (1.0 - cfg.beta1 ** self.step_count)
        v_hat = self.v / (1.0 - cfg.beta2 ** self.step_count)
        return params - cfg.learning_rate * m_hat / (np.sqrt(v_hat) + cfg.eps)


def _evaluate(caches: Sequence[BlendCache], truths: Sequence[SpatialSpectrum], sh: NDArray[np.float64],
              cfg: TrainConfig, calibration: Optional[NDArray[np.float64]]) -> Tuple[float, float, float]:
    """Mean PSNR, mean SSIM and mean render time in ms of cached poses."""
    started = time.perf_counter()
    rendered = [spectrum_from_cache(c, sh, cfg.render_mode, calibration) for c in caches]
    elapsed_ms = (time.perf_counter() - started) * 1000.0 / max(len(caches), 1)
    report = evaluate_spectra(rendered, truths, floor=cfg.db_floor)
    return report.psnr, report.ssim, elapsed_ms


def train(field: GaussianField, dataset: Dataset, cfg: TrainConfig,
          calibration: Optional[NDArray[np.float64]] = None,
          test_dataset: Optional[Dataset] = None,
          threads: Optional[int] = None) -> Tuple[GaussianField, TrainReport]:
    """
    Fit SH gain coefficients to the dataset's path-gain spectra.

    Returns a new field with the input's geometry and trained coefficients.
    In legacy mode a missing calibration is computed from the training set.
    """
    if len(dataset) == 0:
        raise ValueError("Training needs a non-empty dataset")
    if len(field) == 0:
        raise ValueError("Training needs a seeded field")
    started = time.perf_counter()
    workers = threads or settings.THZ_THREADS

    caches = build_blend_caches(field, _poses(dataset), dataset.grid, workers)
    if cfg.render_mode == RenderMode.LEGACY and calibration is None:
        calibration = legacy_calibration(field, dataset, caches)
    truths_db = [clamped_db(s.spectrum.path_gain, cfg.db_floor).ravel() for s in dataset]

    sh = field.sh.copy()
    optimizer = _Optimizer(cfg, sh.shape)
    rng = np.random.default_rng(cfg.rng_seed)
    loss_trace: List[float] = []
    checkpoints = []

    with ThreadPoolExecutor(max_workers=workers) as executor:
        for epoch in range(cfg.epochs):
            order = rng.permutation(len(dataset))
            epoch_losses = []
            for batch_no, start in enumerate(range(0, len(order), cfg.batch_size)):
                batch = order[start:start + cfg.batch_size]
                current = sh
                results = list(executor.map(
                    lambda i: loss_and_grad(caches[i], truths_db[i], current, cfg, calibration), batch))
                grad = np.zeros_like(sh)
                for value, g in results:
                    epoch_losses.append(value)
                    grad += g
                grad /= len(batch)
                if not all(math.isfinite(v) for v, _ in results) or not np.all(np.isfinite(grad)):
                    logger.error(f"Training diverged at epoch {epoch} batch {batch_no}")
                    raise TrainingDivergedError(
                        f"Non-finite loss or gradient at epoch {epoch}, batch {batch_no}"
                    )
                sh = optimizer.step(sh, grad)

            loss_trace.append(float(np.mean(epoch_losses)))
            if cfg.log_every and (epoch + 1) % cfg.log_every == 0:
                logger.info(f"Epoch {epoch + 1}/{cfg.epochs}: loss {loss_trace[-1]:.4f}")
            if cfg.checkpoint_every and cfg.checkpoint_path and (epoch + 1) % cfg.checkpoint_every == 0:
                checkpoints.append(save_checkpoint(cfg.checkpoint_path, field.with_sh(sh), calibration))

    trained = field.with_sh(sh)
    train_psnr, train_ssim, inference_ms = _evaluate(
        caches, [s.spectrum for s in dataset], sh, cfg, calibration)
    report = TrainReport(loss_trace=loss_trace, train_psnr=train_psnr, train_ssim=train_ssim,
                         inference_ms=inference_ms, checkpoints=checkpoints)
    if test_dataset is not None and len(test_dataset):
        test_caches = build_blend_caches(field, _poses(test_dataset), test_dataset.grid, workers)
        report.test_psnr, report.test_ssim, report.inference_ms = _evaluate(
            test_caches, [s.spectrum for s in test_dataset], sh, cfg, calibration)
    report.wall_seconds = time.perf_counter() - started
    logger.info(
        f"Trained {len(field)} Gaussians on {len(dataset)} samples in {report.wall_seconds:.1f} s "
        f"({cfg.render_mode}, final loss {loss_trace[-1]:.4f}, train PSNR {train_psnr:.2f} dB)"
    )
    return trained, report
