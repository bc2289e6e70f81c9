"""Run configuration: dataclass defaults + flat key-value config files.

Config files are plain text, one ``key = value`` per line, ``#`` comments;
command-line flags override file values, which override the defaults below.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, fields

from .errors import ConfigError


@dataclass
class RunConfig:
    consumption_csv: str = ""
    temperature_csv: str = ""
    holiday_file: str = ""      # empty -> bundled Madrid 2019 table
    output_dir: str = "out"
    split_seed: int = 7
    training_seed: int = 11
    sampling_seed: int = 101
    learning_rate: float = 1e-3
    batch_size: int = 64
    max_epochs: int = 200
    patience: int = 10
    hidden_width: int = 200
    hidden_layers: int = 4
    conv_channels: int = 16
    head_channels: int = 8
    leaky_slope: float = 0.3
    sigma_max: float = 3.0
    decay_init: float = 0.5
    n_samples: int = 5000
    epsilon: float = 1e-5

    def validate(self, required_paths=()):
        if self.n_samples < 100:
            raise ConfigError(f"n_samples must be >= 100, got {self.n_samples}")
        if self.epsilon <= 0:
            raise ConfigError(f"epsilon must be > 0, got {self.epsilon}")
        if self.sigma_max <= 0:
            raise ConfigError(f"sigma_max must be > 0, got {self.sigma_max}")
        for attr in required_paths:
            path = getattr(self, attr)
            if not path:
                raise ConfigError(f"{attr} is required")
            if not os.path.exists(path):
                raise ConfigError(f"{attr}: no such path {path!r}")
        if self.holiday_file and not os.path.exists(self.holiday_file):
            raise ConfigError(f"holiday_file: no such path {self.holiday_file!r}")


_FIELD_TYPES = {f.name: f.type for f in fields(RunConfig)}


def parse_config_file(path) -> dict:
    """-> {field: typed value}; unknown keys and untyped values are errors."""
    values = {}
    with open(path, "r", encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError(f"{path}:{line_no}: expected 'key = value'")
            key, _, raw = line.partition("=")
            key = key.strip()
            raw = raw.strip()
            if key not in _FIELD_TYPES:
                raise ConfigError(f"{path}:{line_no}: unknown key {key!r}")
            kind = _FIELD_TYPES[key]
            try:
                if kind in ("int", int):
                    values[key] = int(raw)
                elif kind in ("float", float):
                    values[key] = float(raw)
                else:
                    values[key] = raw
            except ValueError:
                raise ConfigError(f"{path}:{line_no}: bad {kind} value {raw!r}") from None
    return values


def build_config(config_path=None, overrides=None) -> RunConfig:
    values = {}
    if config_path:
        if not os.path.exists(config_path):
            raise ConfigError(f"config file not found: {config_path!r}")
        values.update(parse_config_file(config_path))
    for key, value in (overrides or {}).items():
        if value is not None:
            values[key] = value
    return RunConfig(**values)
