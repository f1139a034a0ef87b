"""
Dataset manifest: the JSON index written next to the per-sample files.
"""
from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field
from typing import List, Optional, Tuple

from thzrrf.common.storage import FormatError

from .formats import CHANNELS

FORMAT_VERSION = 1
MANIFEST_NAME = 'manifest.json'


@dataclass
class SampleEntry:
    index: int
    spectrum: str
    mpcs: Optional[str] = None


@dataclass
class DatasetManifest:
    grid: Tuple[int, int]
    sample_count: int
    carrier_frequency: float
    tx_position: Tuple[float, float, float]
    scene_hash: str
    rng_seed: int
    samples: List[SampleEntry] = field(default_factory=list)
    channels: Tuple[str, ...] = CHANNELS
    format_version: int = FORMAT_VERSION

    def __post_init__(self):
        self.grid = tuple(int(v) for v in self.grid)  # type: ignore[assignment]
        self.tx_position = tuple(float(v) for v in self.tx_position)  # type: ignore[assignment]
        self.channels = tuple(self.channels)
        self.samples = [s if isinstance(s, SampleEntry) else SampleEntry(**s) for s in self.samples]
        if self.sample_count != len(self.samples):
            raise ValueError(
                f"Manifest declares {self.sample_count} samples but references {len(self.samples)} files"
            )

    def to_json(self) -> str:
        """Stable rendering: sorted keys, two-space indent, trailing newline."""
        payload = asdict(self)
        payload['grid'] = {'rows': self.grid[0], 'cols': self.grid[1]}
        payload['channels'] = list(self.channels)
        payload['tx_position'] = list(self.tx_position)
        return json.dumps(payload, sort_keys=True, indent=2) + '\n'

    @classmethod
    def from_json(cls, text: str, source: str = MANIFEST_NAME) -> DatasetManifest:
        try:
            payload = json.loads(text)
        except json.JSONDecodeError as exc:
            raise FormatError(f"{source}: invalid JSON at line {exc.lineno} column {exc.colno}") from exc
        if not isinstance(payload, dict):
            raise FormatError(f"{source}: manifest must be a JSON object")
        version = payload.get('format_version')
        if version != FORMAT_VERSION:
            raise FormatError(f"{source}: unsupported format_version {version!r}, expected {FORMAT_VERSION}")
        if tuple(payload.get('channels', ())) != CHANNELS:
            raise FormatError(f"{source}: unexpected channel list {payload.get('channels')!r}")
        try:
            grid = payload.pop('grid')
            return cls(grid=(grid['rows'], grid['cols']), **payload)
        except (KeyError, TypeError, ValueError) as exc:
            raise FormatError(f"{source}: {exc}") from exc
