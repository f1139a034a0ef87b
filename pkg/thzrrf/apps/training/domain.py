from dataclasses import dataclass, field
from pathlib import Path
from typing import List, Optional

from django.conf import settings

from thzrrf.apps.rendering.enums import RenderMode

from .enums import LossKind, OptimizerKind


@dataclass(frozen=True)
class TrainConfig:
    learning_rate: float = 0.05
    epochs: int = 200
    loss_kind: LossKind = LossKind.L2_DB
    db_floor: float = field(default_factory=lambda: settings.THZ_DB_FLOOR)
    rng_seed: int = 0
    batch_size: int = 8
    optimizer: OptimizerKind = OptimizerKind.ADAM
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    render_mode: RenderMode = RenderMode.FULL_PATH
    checkpoint_every: int = 0
    checkpoint_path: Optional[Path] = None
    log_every: int = 10

    def __post_init__(self):
        if not self.learning_rate > 0.0:
            raise ValueError(f"learning_rate must be positive, got {self.learning_rate}")
        if isinstance(self.epochs, bool) or int(self.epochs) != self.epochs or self.epochs < 1:
            raise ValueError(f"epochs must be an integer >= 1, got {self.epochs}")
        if not self.db_floor < 0.0:
            raise ValueError(f"db_floor must be negative, got {self.db_floor}")
        if self.batch_size < 1:
            raise ValueError(f"batch_size must be >= 1, got {self.batch_size}")
        if not (0.0 <= self.beta1 < 1.0 and 0.0 <= self.beta2 < 1.0):
            raise ValueError("Adam betas must be in [0, 1)")
        if self.checkpoint_every < 0:
            raise ValueError("checkpoint_every must be non-negative")
        # accept plain strings from config files
        object.__setattr__(self, 'loss_kind', LossKind(self.loss_kind))
        object.__setattr__(self, 'optimizer', OptimizerKind(self.optimizer))
        object.__setattr__(self, 'render_mode', RenderMode(self.render_mode))


@dataclass
class TrainReport:
    loss_trace: List[float]
    train_psnr: float
    train_ssim: float
    test_psnr: Optional[float] = None
    test_ssim: Optional[float] = None
    wall_seconds: float = 0.0
    inference_ms: float = 0.0
    checkpoints: List[Path] = field(default_factory=list)

    @property
    def epochs(self) -> int:
        return len(self.loss_trace)

    def as_dict(self) -> dict:
        return {
            'epochs': self.epochs,
            'final_loss': self.loss_trace[-1] if self.loss_trace else None,
            'loss_trace': list(self.loss_trace),
            'train_psnr': self.train_psnr,
            'train_ssim': self.train_ssim,
            'test_psnr': self.test_psnr,
            'test_ssim': self.test_ssim,
            'wall_seconds': self.wall_seconds,
            'inference_ms': self.inference_ms,
            'checkpoints': [str(p) for p in self.checkpoints],
        }
