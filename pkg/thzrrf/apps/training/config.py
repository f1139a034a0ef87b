"""
Training config loader.

Schema (YAML), every key optional::

    training:
      learning_rate: 0.05
      epochs: 200
      loss_kind: l2_db          # or l1_db
      optimizer: adam           # or sgd
      render_mode: full_path    # or legacy
      batch_size: 8
      rng_seed: 0
      db_floor: -160.0
      beta1: 0.9
      beta2: 0.999
      eps: 1.0e-8
      checkpoint_every: 0
      log_every: 10
    seeding:
      spacing: 0.25
      init_density: 0.9
      init_scale: 0.15
      flatten_ratio: 0.1
      init_gain: 0.1
      sh_degree: 3
      include_tx: true
      tx_scale: 0.05
    sweep:
      sizes: [10, 20, 50, 100]
      test_size: 20
      pool_seed: 0
      grid_rows: 32
      grid_cols: 64
"""
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable, Dict, Union

from thzrrf.apps.evaluation.services import SweepConfig
from thzrrf.apps.field.domain import SeedConfig
from thzrrf.apps.rendering.enums import RenderMode
from thzrrf.common.config import ConfigDocument, load_yaml, parse_yaml

from .domain import TrainConfig
from .enums import LossKind, OptimizerKind

TOP_LEVEL = ('training', 'seeding', 'sweep')


def _choice(choices: type) -> Callable[[ConfigDocument, tuple], str]:
    def read(doc: ConfigDocument, path: tuple) -> str:
        value = doc.get(path)
        if value not in choices.values:
            raise doc.error(f"'{'.'.join(path)}' must be one of {', '.join(choices.values)}", path)
        return value
    return read


def _boolean(doc: ConfigDocument, path: tuple) -> bool:
    value = doc.get(path)
    if not isinstance(value, bool):
        raise doc.error(f"'{'.'.join(path)}' must be true or false", path)
    return value


def _sizes(doc: ConfigDocument, path: tuple) -> tuple:
    values = doc.sequence(path)
    return tuple(doc.integer(path + (i,)) for i in range(len(values)))


def _number(doc: ConfigDocument, path: tuple) -> float:
    return doc.number(path)


def _integer(doc: ConfigDocument, path: tuple) -> int:
    return doc.integer(path)


TRAINING_FIELDS: Dict[str, Callable] = {
    'learning_rate': _number,
    'epochs': _integer,
    'loss_kind': _choice(LossKind),
    'db_floor': _number,
    'rng_seed': _integer,
    'batch_size': _integer,
    'optimizer': _choice(OptimizerKind),
    'beta1': _number,
    'beta2': _number,
    'eps': _number,
    'render_mode': _choice(RenderMode),
    'checkpoint_every': _integer,
    'log_every': _integer,
}

SEEDING_FIELDS: Dict[str, Callable] = {
    'spacing': _number,
    'init_density': _number,
    'init_scale': _number,
    'flatten_ratio': _number,
    'init_gain': _number,
    'sh_degree': _integer,
    'include_tx': _boolean,
    'tx_scale': _number,
}

SWEEP_FIELDS: Dict[str, Callable] = {
    'sizes': _sizes,
    'test_size': _integer,
    'pool_seed': _integer,
    'grid_rows': _integer,
    'grid_cols': _integer,
}


@dataclass(frozen=True)
class RunConfig:
    training: TrainConfig = field(default_factory=TrainConfig)
    seeding: SeedConfig = field(default_factory=SeedConfig)
    sweep: SweepConfig = field(default_factory=SweepConfig)


def _section(doc: ConfigDocument, name: str, readers: Dict[str, Callable], factory: type) -> Any:
    if doc.get((name,)) is None:
        return factory()
    values = doc.mapping((name,), allowed=readers)
    options = {key: readers[key](doc, (name, key)) for key in values}
    try:
        return factory(**options)
    except ValueError as exc:
        raise doc.error(f"invalid '{name}' section: {exc}", (name,), at_key=True) from exc


def parse_run_config(doc: ConfigDocument) -> RunConfig:
    if doc.data:
        doc.mapping((), allowed=TOP_LEVEL)
    return RunConfig(
        training=_section(doc, 'training', TRAINING_FIELDS, TrainConfig),
        seeding=_section(doc, 'seeding', SEEDING_FIELDS, SeedConfig),
        sweep=_section(doc, 'sweep', SWEEP_FIELDS, SweepConfig),
    )


def load_run_config(path: Union[str, Path]) -> RunConfig:
    """Load a training config; ``FileNotFoundError`` if missing, ``ConfigError`` if invalid."""
    return parse_run_config(load_yaml(path))


def load_run_config_text(text: str, source: str = '<config>') -> RunConfig:
    return parse_run_config(parse_yaml(text, source))
