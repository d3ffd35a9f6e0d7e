"""Scenario configuration: file format, validation, and overrides.

A scenario is a nested key-value document with five sections: system
(source/channel/receiver), security (finite-size knobs), drift (angle
trajectory), run (duration, seed, output directory, mode), and sweep
(grids).  Every leaf can be overridden from the command line; validation
failures name the offending field by its dotted path so they are
actionable from a shell.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import yaml

from .channel import SystemParams
from .drift import DriftKind, DriftModel
from .protocol import ParameterError, SecurityParams


class ConfigError(ValueError):
    """A configuration document or override is invalid; message carries
    the dotted field path."""


MODE_ANALYTIC = "analytic"
MODE_MONTECARLO = "montecarlo"


@dataclass(frozen=True)
class RunSettings:
    """Run-level knobs that are not physics: duration, seed, outputs."""

    duration_s: float = 182520.0
    seed: int = 1
    out_dir: str = "out"
    mode: str = MODE_ANALYTIC
    smoothing: int = 1

    def __post_init__(self) -> None:
        if self.duration_s <= 0:
            raise ParameterError(f"duration_s must be > 0, got {self.duration_s}")
        if self.seed < 0:
            raise ParameterError(f"seed must be >= 0, got {self.seed}")
        if self.mode not in (MODE_ANALYTIC, MODE_MONTECARLO):
            raise ParameterError(f"mode must be analytic or montecarlo, got {self.mode!r}")
        if self.smoothing < 1:
            raise ParameterError(f"smoothing must be >= 1, got {self.smoothing}")


def _strictly_increasing(values: tuple[float, ...]) -> bool:
    return all(b > a for a, b in zip(values, values[1:]))


@dataclass(frozen=True)
class SweepSettings:
    """Grids for the sweep commands."""

    loss_grid_db: tuple[float, ...] = tuple(
        round(25.0 + 0.1 * i, 1) for i in range(231)
    )
    n_t_grid: tuple[float, ...] = (1e12, 1e13)
    m_grid: tuple[int, ...] = (16,)

    def __post_init__(self) -> None:
        for name in ("loss_grid_db", "n_t_grid", "m_grid"):
            values = getattr(self, name)
            if len(values) == 0:
                raise ParameterError(f"{name} must be non-empty")
            if not _strictly_increasing(values):
                raise ParameterError(f"{name} must be strictly increasing")
        if any(m < 1 for m in self.m_grid):
            raise ParameterError("m_grid entries must be >= 1")
        if any(n <= 0 for n in self.n_t_grid):
            raise ParameterError("n_t_grid entries must be > 0")


@dataclass(frozen=True)
class ScenarioConfig:
    """Fully resolved scenario: everything a command needs to run."""

    system: SystemParams = field(default_factory=SystemParams)
    security: SecurityParams = field(default_factory=SecurityParams)
    drift: DriftModel = field(default_factory=DriftModel)
    run: RunSettings = field(default_factory=RunSettings)
    sweep: SweepSettings = field(default_factory=SweepSettings)


_SECTION_TYPES = {
    "system": SystemParams,
    "security": SecurityParams,
    "drift": DriftModel,
    "run": RunSettings,
    "sweep": SweepSettings,
}

# Fields that must stay integers even though YAML or the shell may hand
# us floats or strings.
_INT_FIELDS = {"m_slices", "seed", "smoothing"}
_GRID_FIELDS = {"loss_grid_db", "n_t_grid", "m_grid"}


def _coerce_leaf(section: str, name: str, ftype: Any, value: Any) -> Any:
    path = f"{section}.{name}"
    if name == "kind":
        if isinstance(value, DriftKind):
            return value
        try:
            return DriftKind(str(value))
        except ValueError:
            allowed = ", ".join(k.value for k in DriftKind)
            raise ConfigError(f"{path}: unknown drift kind {value!r} (one of: {allowed})") from None
    if name in _GRID_FIELDS:
        if isinstance(value, str):
            parts = [p for p in value.split(",") if p.strip()]
        elif isinstance(value, (list, tuple)):
            parts = list(value)
        else:
            raise ConfigError(f"{path}: expected a list, got {value!r}")
        try:
            if name == "m_grid":
                return tuple(int(p) for p in parts)
            return tuple(float(p) for p in parts)
        except (TypeError, ValueError):
            raise ConfigError(f"{path}: non-numeric grid entry in {value!r}") from None
    if name in _INT_FIELDS:
        try:
            as_float = float(value)
        except (TypeError, ValueError):
            raise ConfigError(f"{path}: expected an integer, got {value!r}") from None
        if not as_float.is_integer():
            raise ConfigError(f"{path}: expected an integer, got {value!r}")
        return int(as_float)
    if ftype in ("float", float):
        try:
            return float(value)
        except (TypeError, ValueError):
            raise ConfigError(f"{path}: expected a number, got {value!r}") from None
    if ftype in ("int", int):
        try:
            return int(value)
        except (TypeError, ValueError):
            raise ConfigError(f"{path}: expected an integer, got {value!r}") from None
    if ftype in ("str", str):
        return str(value)
    return value


def _build_section(section: str, cls: type, data: dict[str, Any]) -> Any:
    field_types = {f.name: f.type for f in dataclasses.fields(cls)}
    kwargs = {}
    for key, value in data.items():
        if key not in field_types:
            raise ConfigError(f"{section}.{key}: unknown field")
        kwargs[key] = _coerce_leaf(section, key, field_types[key], value)
    try:
        return cls(**kwargs)
    except ParameterError as exc:
        raise ConfigError(f"{section}: {exc}") from exc


def config_from_mapping(data: dict[str, Any]) -> ScenarioConfig:
    """Build and validate a scenario from a nested mapping."""
    if not isinstance(data, dict):
        raise ConfigError("top level: expected a mapping of sections")
    sections = {}
    for key, value in data.items():
        if key not in _SECTION_TYPES:
            raise ConfigError(f"{key}: unknown section")
        if value is None:
            value = {}
        if not isinstance(value, dict):
            raise ConfigError(f"{key}: expected a mapping")
        sections[key] = _build_section(key, _SECTION_TYPES[key], value)
    return ScenarioConfig(**sections)


def load_config(path: str | Path) -> ScenarioConfig:
    """Parse and validate a scenario file."""
    try:
        with open(path, "r", encoding="utf-8") as fh:
            data = yaml.safe_load(fh)
    except yaml.YAMLError as exc:
        raise ConfigError(f"{path}: not parseable: {exc}") from exc
    if data is None:
        data = {}
    return config_from_mapping(data)


def apply_overrides(config: ScenarioConfig, overrides: dict[str, Any]) -> ScenarioConfig:
    """Replace leaf fields given as dotted paths, revalidating everything."""
    data = config_to_mapping(config)
    for dotted, value in overrides.items():
        parts = dotted.split(".")
        if len(parts) != 2:
            raise ConfigError(f"{dotted}: overrides use section.field paths")
        section, name = parts
        if section not in _SECTION_TYPES:
            raise ConfigError(f"{dotted}: unknown section")
        data.setdefault(section, {})[name] = value
    return config_from_mapping(data)


def config_to_mapping(config: ScenarioConfig) -> dict[str, Any]:
    """Plain nested mapping mirror of a scenario, YAML-ready."""
    out: dict[str, Any] = {}
    for section, cls in _SECTION_TYPES.items():
        obj = getattr(config, section)
        fields = {}
        for f in dataclasses.fields(cls):
            value = getattr(obj, f.name)
            if isinstance(value, DriftKind):
                value = value.value
            elif isinstance(value, tuple):
                value = list(value)
            fields[f.name] = value
        out[section] = fields
    return out


def dump_config(config: ScenarioConfig) -> str:
    """Resolved configuration as a reproducible document."""
    return yaml.safe_dump(config_to_mapping(config), sort_keys=True, default_flow_style=False)
