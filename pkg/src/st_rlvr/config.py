"""Merged application config: built-in defaults < JSON config file < CLI flags."""

from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Optional

from .errors import ConfigError
from .grpo import GrpoConfig
from .qa_gen import GenerationConfig
from .rewards import RewardConfig

SECTIONS = {"generation": GenerationConfig, "reward": RewardConfig, "grpo": GrpoConfig}


@dataclass
class AppConfig:
    generation: GenerationConfig = field(default_factory=GenerationConfig)
    reward: RewardConfig = field(default_factory=RewardConfig)
    grpo: GrpoConfig = field(default_factory=GrpoConfig)

    def to_dict(self) -> dict:
        return {name: dataclasses.asdict(getattr(self, name)) for name in SECTIONS}


def _build(section: str, values: dict) -> Any:
    cls = SECTIONS[section]
    known = {f.name for f in dataclasses.fields(cls)}
    for key in values:
        if key not in known:
            raise ConfigError(f"{section}.{key}: unknown field")
    if "length_window" in values:
        lw = values["length_window"]
        if not isinstance(lw, (list, tuple)) or len(lw) != 2:
            raise ConfigError(f"{section}.length_window: expected [l_min, l_max]")
        values = {**values, "length_window": tuple(lw)}
    try:
        return cls(**values)
    except ConfigError as exc:
        raise ConfigError(f"{section}.{exc}") from None
    except TypeError as exc:
        raise ConfigError(f"{section}: {exc}") from None


def load_config(path: Optional[str] = None, overrides: Optional[dict] = None) -> AppConfig:
    """Load ``{"generation": {...}, "reward": {...}, "grpo": {...}}`` and apply overrides.

    ``overrides`` uses dotted keys, e.g. ``{"grpo.beta": 0.1}``.
    """
    raw: dict[str, dict] = {name: {} for name in SECTIONS}
    if path is not None:
        try:
            data = json.loads(Path(path).read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"config file {path}: {exc}") from None
        if not isinstance(data, dict):
            raise ConfigError(f"config file {path}: top level must be an object")
        for name, values in data.items():
            if name not in SECTIONS:
                raise ConfigError(f"{name}: unknown config section")
            if not isinstance(values, dict):
                raise ConfigError(f"{name}: section must be an object")
            raw[name].update(values)
    for dotted, value in (overrides or {}).items():
        if value is None:
            continue
        section, _, key = dotted.partition(".")
        if section not in SECTIONS:
            raise ConfigError(f"{section}: unknown config section")
        raw[section][key] = value
    return AppConfig(**{name: _build(name, values) for name, values in raw.items()})
