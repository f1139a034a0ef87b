"""
Structured-config helpers shared by the scene and training config loaders.

Config files are YAML. Alongside the plain data the composed node tree is kept
so schema errors (unknown keys, wrong types) can point at a line and column.
"""
from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Any, Iterable, Optional, Sequence, Tuple, Union

import yaml

KeyPath = Tuple[Union[str, int], ...]


class ConfigError(ValueError):
    """Config file could not be parsed or does not match its schema."""

    def __init__(self, message: str, source: str = '<config>',
                 line: Optional[int] = None, column: Optional[int] = None):
        self.message = message
        self.source = source
        self.line = line
        self.column = column
        super().__init__(str(self))

    def __str__(self) -> str:
        if self.line is None:
            return f"{self.source}: {self.message}"
        return f"{self.source}:{self.line}:{self.column}: {self.message}"


@dataclass
class ConfigDocument:
    data: Any
    node: Optional[yaml.Node]
    source: str

    def _node_at(self, path: KeyPath) -> Tuple[Optional[yaml.Node], Optional[yaml.Node]]:
        """Return ``(key_node, value_node)`` for a key path, as deep as it resolves."""
        key_node: Optional[yaml.Node] = None
        node = self.node
        for part in path:
            if isinstance(node, yaml.MappingNode):
                for k, v in node.value:
                    if k.value == part:
                        key_node, node = k, v
                        break
                else:
                    return key_node, node
            elif isinstance(node, yaml.SequenceNode) and isinstance(part, int) and part < len(node.value):
                key_node, node = None, node.value[part]
            else:
                return key_node, node
        return key_node, node

    def error(self, message: str, path: KeyPath = (), at_key: bool = False) -> ConfigError:
        key_node, value_node = self._node_at(path)
        node = key_node if (at_key and key_node is not None) else value_node
        if node is None:
            return ConfigError(message, self.source)
        mark = node.start_mark
        return ConfigError(message, self.source, mark.line + 1, mark.column + 1)

    def get(self, path: KeyPath, default: Any = None) -> Any:
        value = self.data
        try:
            for part in path:
                value = value[part]
            return value
        except (KeyError, IndexError, TypeError):
            return default

    def mapping(self, path: KeyPath, allowed: Iterable[str],
                required: Iterable[str] = ()) -> dict:
        """Fetch a mapping, rejecting unknown keys and reporting missing ones."""
        value = self.get(path, None)
        label = '.'.join(str(p) for p in path) or '<root>'
        if not isinstance(value, dict):
            raise self.error(f"'{label}' must be a mapping", path)
        allowed_set = set(allowed)
        for key in value:
            if key not in allowed_set:
                raise self.error(
                    f"unknown key '{key}' in '{label}' (allowed: {', '.join(sorted(allowed_set))})",
                    path + (key,), at_key=True,
                )
        for key in required:
            if key not in value:
                raise self.error(f"missing required key '{key}' in '{label}'", path)
        return value

    def sequence(self, path: KeyPath) -> list:
        value = self.get(path, None)
        if not isinstance(value, list):
            raise self.error(f"'{'.'.join(str(p) for p in path)}' must be a list", path)
        return value

    def number(self, path: KeyPath, default: Optional[float] = None) -> float:
        value = self.get(path, default)
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise self.error(f"'{'.'.join(str(p) for p in path)}' must be a number", path)
        return float(value)

    def integer(self, path: KeyPath, default: Optional[int] = None) -> int:
        value = self.get(path, default)
        if isinstance(value, bool) or not isinstance(value, int):
            raise self.error(f"'{'.'.join(str(p) for p in path)}' must be an integer", path)
        return int(value)

    def vector3(self, path: KeyPath) -> Sequence[float]:
        value = self.get(path, None)
        if (not isinstance(value, list) or len(value) != 3
                or any(isinstance(c, bool) or not isinstance(c, (int, float)) for c in value)):
            raise self.error(f"'{'.'.join(str(p) for p in path)}' must be a list of 3 numbers", path)
        return [float(c) for c in value]


def parse_yaml(text: str, source: str = '<config>') -> ConfigDocument:
    try:
        node = yaml.compose(text, Loader=yaml.SafeLoader)
        data = yaml.safe_load(text)
    except yaml.MarkedYAMLError as exc:
        mark = exc.problem_mark or exc.context_mark
        problem = exc.problem or str(exc)
        if mark is None:
            raise ConfigError(problem, source) from exc
        raise ConfigError(problem, source, mark.line + 1, mark.column + 1) from exc
    except yaml.YAMLError as exc:
        raise ConfigError(str(exc), source) from exc
    return ConfigDocument(data=data if data is not None else {}, node=node, source=source)


def load_yaml(path: Union[str, Path]) -> ConfigDocument:
    """Read and parse a YAML config file; a missing file raises ``FileNotFoundError``."""
    target = Path(path)
    if not target.is_file():
        raise FileNotFoundError(f"No such config file: {target}")
    return parse_yaml(target.read_text(encoding='utf-8'), source=str(target))
