"""JSON run configuration with strict key checking.

Top-level sections (all optional): ``plant``, ``ann``, ``rcac``, ``loop``,
``commands``. Each maps onto a dataclass; unknown keys anywhere raise.
"""
from __future__ import annotations

import json
import types
import typing
from dataclasses import asdict, dataclass, field, fields, is_dataclass, replace
from pathlib import Path

from .ann import TrainConfig
from .combustor import FuelGrain, PlantConfig, RegressionParams
from .harness import SCENARIOS, CommandSignal, LoopConfig
from .inlet import InletModel
from .rcac import RcacConfig


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class AnnSection:
    points_per_axis: int = 20
    train: TrainConfig = field(default_factory=TrainConfig)


@dataclass(frozen=True)
class RunConfig:
    plant: PlantConfig = field(default_factory=PlantConfig)
    ann: AnnSection = field(default_factory=AnnSection)
    rcac: RcacConfig = field(default_factory=RcacConfig)
    loop: LoopConfig = field(default_factory=LoopConfig)
    commands: dict[str, CommandSignal] = field(default_factory=lambda: dict(SCENARIOS))

    def loop_config(self, **overrides) -> LoopConfig:
        return replace(self.loop, rcac=self.rcac, **overrides)


def _coerce(tp, value, where):
    origin = typing.get_origin(tp)
    args = typing.get_args(tp)
    if origin in (typing.Union, types.UnionType):
        if value is None and type(None) in args:
            return None
        inner = [a for a in args if a is not type(None)]
        return _coerce(inner[0], value, where)
    if is_dataclass(tp):
        return build(tp, value, where)
    if origin is tuple:
        if not isinstance(value, (list, tuple)):
            raise ConfigError(f"{where}: expected a list")
        if len(args) == 2 and args[1] is Ellipsis:
            return tuple(_coerce(args[0], v, f"{where}[{i}]") for i, v in enumerate(value))
        if len(args) != len(value):
            raise ConfigError(f"{where}: expected {len(args)} entries")
        return tuple(_coerce(a, v, f"{where}[{i}]") for i, (a, v) in enumerate(zip(args, value)))
    if origin is dict:
        if not isinstance(value, dict):
            raise ConfigError(f"{where}: expected an object")
        return {k: _coerce(args[1], v, f"{where}.{k}") for k, v in value.items()}
    if tp is float:
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError(f"{where}: expected a number")
        return float(value)
    if tp is int:
        if isinstance(value, bool) or not isinstance(value, int):
            raise ConfigError(f"{where}: expected an integer")
        return value
    if tp is bool:
        if not isinstance(value, bool):
            raise ConfigError(f"{where}: expected true/false")
        return value
    if tp is str:
        if not isinstance(value, str):
            raise ConfigError(f"{where}: expected a string")
        return value
    return value


def build(cls, data, where="config"):
    """Dataclass instance from a dict, overriding only the keys given."""
    if not isinstance(data, dict):
        raise ConfigError(f"{where}: expected an object")
    hints = typing.get_type_hints(cls)
    known = {f.name for f in fields(cls)}
    unknown = set(data) - known
    if unknown:
        raise ConfigError(f"{where}: unknown key(s) {sorted(unknown)}")
    kwargs = {k: _coerce(hints[k], v, f"{where}.{k}") for k, v in data.items()}
    try:
        return cls(**kwargs)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{where}: {exc}") from exc


def load_config(path=None) -> RunConfig:
    if path is None:
        return RunConfig()
    try:
        data = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON ({exc})") from exc
    if isinstance(data, dict) and isinstance(data.get("loop"), dict) and "rcac" in data["loop"]:
        raise ConfigError("config.loop: rcac settings belong in the top-level 'rcac' section")
    if isinstance(data, dict) and "commands" in data and isinstance(data["commands"], dict):
        # named commands extend the built-in scenarios
        merged = {k: asdict(v) for k, v in SCENARIOS.items()}
        merged.update(data["commands"])
        data = {**data, "commands": merged}
    return build(RunConfig, data)


def config_to_dict(cfg) -> dict:
    d = json.loads(json.dumps(asdict(cfg)))
    if isinstance(cfg, RunConfig):
        d["loop"].pop("rcac", None)
    return d


__all__ = ["AnnSection", "ConfigError", "FuelGrain", "InletModel", "RegressionParams",
           "RunConfig", "build", "config_to_dict", "load_config"]
