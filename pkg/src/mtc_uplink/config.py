"""Flat ``key = value`` config files for :class:`SystemConfig`.

Keys are the ``SystemConfig`` field names.  ``#`` starts a comment,
``cell_range`` takes two comma-separated distances, and unknown or repeated
keys are rejected.
"""

from __future__ import annotations

import dataclasses
import hashlib
from pathlib import Path
from typing import Iterable, Mapping

from .scenario import ConfigError, SystemConfig

__all__ = ["parse_config", "load_config", "apply_overrides", "dump_config", "config_hash"]

_FIELDS = {f.name: f for f in dataclasses.fields(SystemConfig)}
_INT_FIELDS = {"m_devices", "n_max", "n_t", "rng_seed"}


def _convert(key: str, raw: str):
    raw = raw.strip()
    try:
        if key == "cell_range":
            parts = [p.strip() for p in raw.strip("[]()").split(",")]
            if len(parts) != 2:
                raise ValueError("expected two comma-separated values")
            return (float(parts[0]), float(parts[1]))
        if key in _INT_FIELDS:
            return int(raw)
        return float(raw)
    except ValueError as exc:
        raise ConfigError(f"{key}: cannot parse {raw!r} ({exc})") from None


def _build(values: Mapping[str, str], base: SystemConfig) -> SystemConfig:
    changes = {}
    for key, raw in values.items():
        if key not in _FIELDS:
            raise ConfigError(f"{key}: unknown config key")
        changes[key] = _convert(key, raw)
    return dataclasses.replace(base, **changes)


def parse_config(text: str, base: SystemConfig = SystemConfig()) -> SystemConfig:
    values: dict[str, str] = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {line!r}")
        key, raw = (s.strip() for s in line.split("=", 1))
        if key in values:
            raise ConfigError(f"{key}: repeated on line {lineno}")
        values[key] = raw
    return _build(values, base)


def load_config(path) -> SystemConfig:
    return parse_config(Path(path).read_text())


def apply_overrides(cfg: SystemConfig, overrides: Iterable[str]) -> SystemConfig:
    """Apply ``key=value`` strings on top of ``cfg``."""
    values = {}
    for item in overrides:
        if "=" not in item:
            raise ConfigError(f"override {item!r} is not of the form key=value")
        key, raw = (s.strip() for s in item.split("=", 1))
        values[key] = raw
    return _build(values, cfg)


def dump_config(cfg: SystemConfig) -> str:
    lines = []
    for name in _FIELDS:
        v = getattr(cfg, name)
        if name == "cell_range":
            text = f"{float(v[0])!r}, {float(v[1])!r}"
        elif name in _INT_FIELDS:
            text = str(int(v))
        else:
            text = repr(float(v))
        lines.append(f"{name} = {text}")
    return "\n".join(lines) + "\n"


def config_hash(cfg: SystemConfig) -> str:
    return hashlib.sha256(dump_config(cfg).encode()).hexdigest()
