"""Run configuration: nested dataclasses, loaded from and dumped to YAML.

Every key has a default; unknown keys are rejected so typos fail loudly.
"""

from __future__ import annotations

import dataclasses
import types
import typing
from dataclasses import dataclass, field
from pathlib import Path

import yaml

from .agents import AGENT_KINDS, DqnConfig, SacConfig, TabularConfig
from .dataset import SynthProfile
from .env import BatterySpec, EnvParams

MODES = ("train", "train-fed", "eval", "gen-data")


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class DataConfig:
    days: int = 7
    train_fraction: float = 0.8
    # one CSV per house; empty means synthetic houses
    paths: tuple[str, ...] = ()
    profile: SynthProfile = field(default_factory=SynthProfile)


@dataclass(frozen=True)
class FederationConfig:
    episodes_per_round: int = 5
    reset_targets_on_sync: bool = False

    def __post_init__(self):
        if self.episodes_per_round < 1:
            raise ValueError("episodes_per_round must be >= 1")


@dataclass(frozen=True)
class RunConfig:
    mode: str = "train"
    run_id: str = "run"
    seed: int = 0
    houses: int = 1
    timesteps: int = 75_000
    agent: str = "sac"
    out_dir: str = "runs/default"
    checkpoint_dir: str | None = None
    workers: int = 1
    data: DataConfig = field(default_factory=DataConfig)
    battery: BatterySpec = field(default_factory=BatterySpec)
    env: EnvParams = field(default_factory=EnvParams)
    sac: SacConfig = field(default_factory=SacConfig)
    dqn: DqnConfig = field(default_factory=DqnConfig)
    tabular: TabularConfig = field(default_factory=TabularConfig)
    federation: FederationConfig = field(default_factory=FederationConfig)

    def __post_init__(self):
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}")
        if self.agent not in AGENT_KINDS:
            raise ValueError(f"agent must be one of {AGENT_KINDS}")
        if self.houses < 1 or self.timesteps < 1 or self.workers < 1:
            raise ValueError("houses, timesteps and workers must be >= 1")
        if self.data.paths and len(self.data.paths) != self.houses:
            raise ValueError(f"{len(self.data.paths)} data paths given for {self.houses} houses")


def _convert(hint, value, where: str):
    origin = typing.get_origin(hint)
    args = typing.get_args(hint)
    if origin in (typing.Union, types.UnionType):
        if value is None and type(None) in args:
            return None
        (inner,) = [a for a in args if a is not type(None)]
        return _convert(inner, value, where)
    if dataclasses.is_dataclass(hint):
        if not isinstance(value, dict):
            raise ConfigError(f"{where}: expected a mapping")
        return from_dict(hint, value, where)
    if origin is tuple:
        if not isinstance(value, (list, tuple)):
            raise ConfigError(f"{where}: expected a list")
        return tuple(_convert(args[0], v, where) for v in value)
    if hint is bool:
        if not isinstance(value, bool):
            raise ConfigError(f"{where}: expected true/false")
        return value
    if hint is int:
        if isinstance(value, bool) or not isinstance(value, int):
            raise ConfigError(f"{where}: expected an integer")
        return value
    if hint is float:
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError(f"{where}: expected a number")
        return float(value)
    if hint is str:
        if not isinstance(value, str):
            raise ConfigError(f"{where}: expected a string")
        return value
    raise ConfigError(f"{where}: unsupported type {hint}")


def from_dict(cls, data: dict, where: str = ""):
    hints = typing.get_type_hints(cls)
    names = {f.name for f in dataclasses.fields(cls)}
    unknown = sorted(set(data) - names)
    if unknown:
        raise ConfigError(f"unknown key(s) in {where or 'config'}: {', '.join(unknown)}")
    kwargs = {k: _convert(hints[k], v, f"{where}.{k}".lstrip(".")) for k, v in data.items()}
    try:
        return cls(**kwargs)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{where or 'config'}: {exc}") from None


def to_dict(obj) -> dict:
    out = {}
    for f in dataclasses.fields(obj):
        v = getattr(obj, f.name)
        if dataclasses.is_dataclass(v):
            v = to_dict(v)
        elif isinstance(v, tuple):
            v = list(v)
        out[f.name] = v
    return out


def parse_config(data: dict | None) -> RunConfig:
    return from_dict(RunConfig, data or {})


def load_config(path: str | Path) -> RunConfig:
    text = Path(path).read_text()
    try:
        data = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigError(f"{path}: {exc}") from None
    if data is not None and not isinstance(data, dict):
        raise ConfigError(f"{path}: top level must be a mapping")
    return parse_config(data)


def dump_config(config: RunConfig) -> str:
    return yaml.safe_dump(to_dict(config), sort_keys=False)


def set_key(data: dict, dotted: str, value) -> None:
    """Set ``a.b.c`` in a nested dict, creating intermediate mappings."""
    parts = dotted.split(".")
    node = data
    for p in parts[:-1]:
        node = node.setdefault(p, {})
        if not isinstance(node, dict):
            raise ConfigError(f"{dotted}: {p} is not a section")
    node[parts[-1]] = value
